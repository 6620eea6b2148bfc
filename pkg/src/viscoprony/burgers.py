"""Burgers model: a Maxwell unit (E1, eta1) in series with a Kelvin-Voigt unit (E2, eta2).

Its relaxation modulus is a two-term Prony series, so each Laplacian mode
obeys a fourth-order ODE with characteristic roots ``0, rho, i*omega`` and
``-i*conj(omega)``. The nonzero roots solve the cubic

    z^3 + (r1 + r2) z^2 + (lam + r1 r2) z + lam (r1 + r2 - b1 - b2) = 0,

solved here by Cardano's formula. Modal solutions take the closed form

    u(t) = R1 + R2 exp(rho t) + C exp(i omega t) + conj(C) exp(-i conj(omega) t).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from ._format import fmt, jsonable
from .errors import DegenerateRootsError
from .prony import PronyModel

COLLISION_TOL = 1e-9


@dataclass(frozen=True)
class BurgersParameters:
    E1: float
    E2: float
    eta1: float
    eta2: float

    def __post_init__(self):
        for name in ("E1", "E2", "eta1", "eta2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class KernelPair:
    """Two-exponential memory kernel ``b1 exp(-r1 t) + b2 exp(-r2 t)``.

    ``b2 = r2 = 0`` is allowed and gives the single-kernel equation.
    """

    b1: float
    r1: float
    b2: float = 0.0
    r2: float = 0.0

    @property
    def accumulation(self) -> float:
        return self.b1 + self.b2 - self.r1 - self.r2


@dataclass(frozen=True)
class BurgersDerived:
    """Creep constants p1, p2, q1, q2 and the normalized kernel of a Burgers model."""

    p1: float
    p2: float
    q1: float
    q2: float
    A: float
    r1: float
    r2: float
    b1: float
    b2: float
    c2: float
    alpha: float = 0.0

    @property
    def accumulation(self) -> float:
        """Limit of the real eigenvalue branch, ``b1 + b2 - r1 - r2``."""
        return self.b1 + self.b2 - self.r1 - self.r2

    def prony_model(self) -> PronyModel:
        return PronyModel.from_kernel([self.b1, self.b2], [self.r1, self.r2])

    def kernel(self) -> KernelPair:
        return KernelPair(self.b1, self.r1, self.b2, self.r2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["accumulation"] = self.accumulation
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(jsonable(self.to_dict(), digits=17), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "BurgersDerived":
        names = cls.__dataclass_fields__
        return cls(**{k: float(v) for k, v in data.items() if k in names})


def derive(params: BurgersParameters) -> BurgersDerived:
    E1, E2, eta1, eta2 = params.E1, params.E2, params.eta1, params.eta2
    p1 = eta1 / E1 + eta1 / E2 + eta2 / E2
    p2 = eta1 * eta2 / (E1 * E2)
    q1 = eta1
    q2 = eta1 * eta2 / E2
    A = math.sqrt(p1 * p1 - 4.0 * p2)
    # r1 = (p1 - A) / (2 p2) rewritten without the cancellation.
    r1 = 2.0 / (p1 + A)
    r2 = (p1 + A) / (2.0 * p2)
    c2 = q2 / p2
    b1 = r1 * (q1 - q2 * r1) / (c2 * A)
    b2 = -r2 * (q1 - q2 * r2) / (c2 * A)
    return BurgersDerived(p1, p2, q1, q2, A, r1, r2, b1, b2, c2, 0.0)


def cubic_coefficients(kernel, lam):
    """Monic cubic ``z^3 + a z^2 + b z + c`` as ``(a, b, c)``."""
    a = kernel.r1 + kernel.r2
    b = lam + kernel.r1 * kernel.r2
    c = lam * (kernel.r1 + kernel.r2 - kernel.b1 - kernel.b2)
    return a, b, c


@dataclass(frozen=True)
class ModeRoots:
    rho: float
    omega: complex | None
    roots: tuple
    degenerate: bool = False


def _cubic_newton(a, b, c, z):
    p = ((z + a) * z + b) * z + c
    dp = (3 * z + 2 * a) * z + b
    return z - p / dp if dp != 0 else z


def mode_roots(kernel, lam: float) -> ModeRoots:
    """Roots of the modal cubic by Cardano's formula.

    With one real root the result is ``rho`` plus ``omega`` chosen with
    ``Re omega > 0`` and ``Im omega > 0`` so the complex pair is
    ``i omega`` and ``-i conj(omega)``. If the discriminant admits three real
    roots they are returned with ``degenerate=True`` and ``omega=None``.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    a, b, c = cubic_coefficients(kernel, lam)
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        sq = math.sqrt(disc)
        # Take the larger-magnitude cube argument; its partner follows from uv = -p/3.
        w = -q / 2.0 + math.copysign(sq, -q)
        u = math.copysign(abs(w) ** (1.0 / 3.0), w)
        v = -p / (3.0 * u) if u != 0 else 0.0
        denom = u * u - u * v + v * v
        y_real = -q / denom if denom != 0 else u + v
        rho = y_real - shift
        z = complex(-0.5 * y_real - shift, 0.5 * math.sqrt(3.0) * abs(u - v))
        rho = _cubic_newton(a, b, c, rho)
        z = _cubic_newton(a, b, c, z)
        if z.imag <= 0:
            z = z.conjugate()
        omega = -1j * z
        return ModeRoots(float(rho), complex(omega), (rho, z, z.conjugate()), False)
    # Three real roots (or a repeated root): trigonometric form.
    m = 2.0 * math.sqrt(-p / 3.0) if p < 0 else 0.0
    if m == 0:
        ys = [-math.copysign(abs(q) ** (1.0 / 3.0), q)] * 3
    else:
        arg = max(-1.0, min(1.0, 3.0 * q / (p * m)))
        theta = math.acos(arg) / 3.0
        ys = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    zs = sorted(_cubic_newton(a, b, c, y - shift) for y in ys)
    rho = min(zs, key=lambda x: abs(x - (kernel.b1 + kernel.b2 - kernel.r1 - kernel.r2)))
    return ModeRoots(float(rho), None, tuple(zs), True)


def asymptotic_roots(kernel, lam: float) -> tuple[float, complex]:
    """Large-``lam`` expansions of ``rho`` and ``omega``.

    Remainders are ``O(1/lam^2)`` for ``rho`` and ``O(1/lam^1.5)`` for ``omega``.
    """
    B = kernel.b1 + kernel.b2
    r1, r2 = kernel.r1, kernel.r2
    acc = B - r1 - r2
    corr = (B - r1) * (B - r2) * acc
    rho = acc - corr / lam
    sq = math.sqrt(lam)
    re = sq + (B * (3 * B - 4 * r1) - 4 * (B - r1) * r2) / (8.0 * sq)
    im = B / 2.0 - corr / (2.0 * lam)
    return rho, complex(re, im)


@dataclass(frozen=True)
class ModeSolution:
    """Closed-form solution of one modal Cauchy problem with real data."""

    lambda_n: float
    rho: float
    omega: complex
    R1: float
    R2: float
    C: complex
    u0n: float
    u1n: float

    @property
    def char_roots(self) -> tuple:
        return (0.0, self.rho, 1j * self.omega, -1j * self.omega.conjugate())

    def __call__(self, t):
        return eval_mode(self, t)

    def derivative(self, t, order: int = 1):
        """``d^k u / dt^k`` of the closed form."""
        t = np.asarray(t, dtype=float)
        iw = 1j * self.omega
        val = self.R2 * self.rho**order * np.exp(self.rho * t) + 2.0 * np.real(
            self.C * iw**order * np.exp(iw * t)
        )
        if order == 0:
            val = val + self.R1
        return float(val) if val.ndim == 0 else val


def mode_coefficients(kernel, lambda_n, rho, omega, u0n, u1n) -> tuple[float, float, complex]:
    """Solve the 4x4 initial-condition system for ``(R1, R2, C)``.

    Matches ``u, u', u'', u'''`` at ``t = 0`` to ``u0n``, ``u1n``,
    ``-lam u0n`` and ``lam (b1 + b2) u0n - lam u1n``. Unknowns are
    ``R1, R2, Re C, Im C``; solved by LU with partial pivoting after column
    equilibration.

    Raises
    ------
    DegenerateRootsError
        If two characteristic roots coincide (relative distance below 1e-9).
    """
    if omega is None:
        raise DegenerateRootsError(
            f"three real characteristic roots at lambda={lambda_n:g}", lam=lambda_n
        )
    iw = 1j * omega
    roots = [0.0, rho, iw, -1j * np.conj(omega)]
    scale = max(abs(z) for z in roots)
    for i in range(4):
        for j in range(i + 1, 4):
            if abs(roots[i] - roots[j]) <= COLLISION_TOL * scale:
                raise DegenerateRootsError(
                    f"characteristic roots collide at lambda={lambda_n:g}", lam=lambda_n
                )
    lam = lambda_n
    B = kernel.b1 + kernel.b2
    rhs = np.array([u0n, u1n, -lam * u0n, lam * B * u0n - lam * u1n], dtype=float)
    mat = np.zeros((4, 4))
    for k in range(4):
        pk = iw**k
        mat[k] = [1.0 if k == 0 else 0.0, rho**k, 2 * pk.real, -2 * pk.imag]
    col = np.max(np.abs(mat), axis=0)
    row = np.max(np.abs(mat / col), axis=1)
    x = np.linalg.solve(mat / col / row[:, None], rhs / row) / col
    return float(x[0]), float(x[1]), complex(x[2], x[3])


def solve_mode(kernel, lambda_n: float, u0n: float, u1n: float) -> ModeSolution:
    roots = mode_roots(kernel, lambda_n)
    if roots.degenerate:
        raise DegenerateRootsError(
            f"three real characteristic roots at lambda={lambda_n:g}", lam=lambda_n
        )
    R1, R2, C = mode_coefficients(kernel, lambda_n, roots.rho, roots.omega, u0n, u1n)
    return ModeSolution(float(lambda_n), roots.rho, roots.omega, R1, R2, C, float(u0n), float(u1n))


def eval_mode(sol: ModeSolution, t):
    """``R1 + R2 e^{rho t} + 2 Re(C e^{i omega t})``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    val = sol.R1 + sol.R2 * np.exp(sol.rho * t) + 2.0 * np.real(sol.C * np.exp(1j * sol.omega * t))
    return float(val) if val.ndim == 0 else val


def quartic_residuals(kernel, lam, roots) -> np.ndarray:
    """Relative residuals of the modal quartic at the given roots."""
    a, b, c = cubic_coefficients(kernel, lam)
    coeffs = np.array([0.0, c, b, a, 1.0])
    out = []
    for z in roots:
        terms = coeffs * np.power(complex(z), np.arange(5))
        out.append(abs(terms.sum()) / max(np.abs(terms).sum(), np.finfo(float).tiny))
    return np.array(out)


MODE_TABLE_COLUMNS = [
    "lambda",
    "rho_exact",
    "rho_asym",
    "re_omega_exact",
    "im_omega_exact",
    "re_omega_asym",
    "im_omega_asym",
    "R1",
    "R2",
    "re_C",
    "im_C",
]


def mode_table(kernel, lams: Iterable[float], u0n=1.0, u1n=0.0) -> list[list]:
    rows = []
    for lam in lams:
        sol = solve_mode(kernel, lam, u0n, u1n)
        rho_a, om_a = asymptotic_roots(kernel, lam)
        rows.append(
            [
                lam,
                sol.rho,
                rho_a,
                sol.omega.real,
                sol.omega.imag,
                om_a.real,
                om_a.imag,
                sol.R1,
                sol.R2,
                sol.C.real,
                sol.C.imag,
            ]
        )
    return rows


def write_mode_table(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MODE_TABLE_COLUMNS)
        for row in rows:
            w.writerow([fmt(v) for v in row])
