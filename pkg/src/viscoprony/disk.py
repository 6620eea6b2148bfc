"""Bessel functions of the first kind and the Dirichlet Laplacian on a disk.

Eigenfunctions of ``L = -c2 * Laplacian`` on the disk of radius ``R`` are
``J_n(j_nk r / R) exp(i n theta)`` with eigenvalues ``c2 (j_nk / R)^2``,
where ``j_nk`` is the k-th positive zero of ``J_n``. Negative orders are
aliased, ``J_{-n} := J_n``, so zero tables are indexed by ``|n|``.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from ._format import fmt, jsonable
from .errors import BracketError

SERIES_CUTOFF = 4.0
ZERO_TOL = 1e-12
DEFAULT_QUAD_POINTS = 512


def _series(n, x):
    half = x / 2.0
    term = half**n / math.factorial(n)
    total = term.copy()
    h = 0
    while True:
        h += 1
        term = -term * half * half / (h * (h + n))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)) or h > 200:
            return total


def _miller_start(n, xmax):
    start = int(max(n, xmax) + 30 + math.sqrt(40.0 * max(n, xmax)))
    return start + start % 2


def _miller_scalar(n, x):
    jp, j, norm, out = 0.0, 1e-30, 0.0, 0.0
    for k in range(_miller_start(n, x), 0, -1):
        jp, j = j, 2.0 * k / x * j - jp
        if k - 1 == n:
            out = j
        if (k - 1) % 2 == 0 and k > 1:
            norm += 2.0 * j
        if abs(j) > 1e250:
            jp, j, norm, out = jp * 1e-250, j * 1e-250, norm * 1e-250, out * 1e-250
    return out / (norm + j)


def _miller(n, x):
    """Backward recurrence normalized by ``J_0 + 2 sum_k J_2k = 1``."""
    if x.size == 1:
        return np.array([_miller_scalar(n, float(x[0]))])
    jp = np.zeros_like(x)
    j = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    out = np.zeros_like(x)
    for k in range(_miller_start(n, x.max()), 0, -1):
        jp, j = j, 2.0 * k / x * j - jp
        # j now holds the unnormalized J_{k-1}.
        if k - 1 == n:
            out = j.copy()
        if (k - 1) % 2 == 0 and k > 1:
            norm += 2.0 * j
        big = np.abs(j) > 1e250
        if big.any():
            for arr in (jp, j, norm, out):
                arr[big] *= 1e-250
    return out / (norm + j)


def bessel_j(n: int, x):
    """``J_n(x)`` for integer ``n`` and ``x >= 0``.

    Power series for ``x <= 4``, normalized backward (Miller) recurrence
    above. Negative ``n`` is aliased to ``|n|``.
    """
    n = abs(int(n))
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise ValueError("bessel_j requires x >= 0")
    flat = np.atleast_1d(x_arr).ravel()
    out = np.empty_like(flat)
    small = flat <= SERIES_CUTOFF
    if small.any():
        out[small] = _series(n, flat[small])
    if (~small).any():
        out[~small] = _miller(n, flat[~small])
    out = out.reshape(x_arr.shape)
    return float(out) if out.ndim == 0 else out


def bessel_j_derivative(n: int, x):
    """``J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2`` using the true ``J_{-1} = -J_1``."""
    n = int(n)
    if n == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))


def mcmahon_guess(n: int, k: int) -> float:
    return (k + n / 2.0 - 0.25) * math.pi


def _refine(n, lo, hi):
    flo = bessel_j(n, lo)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = bessel_j(n, x)
        if fx == 0:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        dfx = bessel_j_derivative(n, x)
        xn = x - fx / dfx if dfx != 0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= ZERO_TOL * max(1.0, abs(x)):
            # One more Newton step: quadratic convergence takes it to rounding level.
            fx = bessel_j(n, xn)
            dfx = bessel_j_derivative(n, xn)
            return xn - fx / dfx if dfx != 0 else xn
        x = xn
    return x


@lru_cache(maxsize=256)
def _zeros_cached(n: int, k_max: int) -> tuple:
    step = 0.25
    lo = max(float(n), step)
    hi = mcmahon_guess(n, k_max) + math.pi
    while True:
        grid = np.arange(lo, hi + step, step)
        vals = bessel_j(n, grid)
        sign = np.signbit(vals)
        idx = np.flatnonzero(sign[1:] != sign[:-1])
        if idx.size >= k_max:
            break
        hi += k_max * math.pi
    zeros = np.array([_refine(n, grid[i], grid[i + 1]) for i in idx[:k_max]])
    # Sign-change counting on a finer grid must agree with the zeros found.
    fine = np.linspace(lo, zeros[-1] + 0.5 * math.pi, 40 * k_max + 200)
    fv = np.signbit(bessel_j(n, fine))
    changes = int(np.count_nonzero(fv[1:] != fv[:-1]))
    if changes != k_max or np.any(np.diff(zeros) <= 0):
        raise BracketError(f"lost a zero of J_{n}: found {k_max}, sign changes {changes}")
    return tuple(zeros)


def bessel_zeros(n: int, k_max: int) -> np.ndarray:
    """First ``k_max`` positive zeros of ``J_n``.

    Zeros are bracketed by a sign scan (spacing of consecutive zeros always
    exceeds the scan step) and refined by safeguarded Newton iteration.
    """
    if int(k_max) < 1:
        raise ValueError("k_max must be at least 1")
    return np.array(_zeros_cached(abs(int(n)), int(k_max)))


@dataclass(frozen=True)
class DiskBasis:
    """Fourier-Bessel basis of the Dirichlet Laplacian on a disk."""

    R: float
    c2: float
    n_max: int
    k_max: int
    zeros: np.ndarray = field(repr=False)  # (n_max + 1, k_max)
    norms: np.ndarray = field(repr=False)  # int_0^R r J_n(j_nk r / R)^2 dr
    quad_points: int = DEFAULT_QUAD_POINTS

    @property
    def nodes(self):
        """Gauss-Legendre nodes and weights on ``[0, R]``."""
        return _gauss(self.quad_points, self.R)

    def zero(self, n, k) -> float:
        return float(self.zeros[abs(n), k - 1])

    def eigenvalue(self, n, k) -> float:
        return self.c2 * (self.zero(n, k) / self.R) ** 2

    def norm(self, n, k) -> float:
        return float(self.norms[abs(n), k - 1])

    def radial(self, n, k, r):
        return bessel_j(abs(n), self.zero(n, k) * np.asarray(r, dtype=float) / self.R)

    def radial_table(self, r, n_max=None, k_max=None) -> np.ndarray:
        """``J_n(j_nk r / R)`` with shape ``(n_max + 1, k_max) + r.shape``."""
        n_max = self.n_max if n_max is None else n_max
        k_max = self.k_max if k_max is None else k_max
        r = np.asarray(r, dtype=float)
        out = np.empty((n_max + 1, k_max) + r.shape)
        for n in range(n_max + 1):
            out[n] = bessel_j(n, np.multiply.outer(self.zeros[n, :k_max], r) / self.R)
        return out

    @cached_property
    def node_table(self) -> np.ndarray:
        """:meth:`radial_table` on the Gauss-Legendre nodes."""
        return self.radial_table(self.nodes[0])

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "c2": self.c2,
            "n_max": self.n_max,
            "k_max": self.k_max,
            "quad_points": self.quad_points,
            "zeros": self.zeros.tolist(),
            "norms": self.norms.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(jsonable(self.to_dict(), digits=17), **kw)

    @classmethod
    def from_dict(cls, d) -> "DiskBasis":
        return cls(
            float(d["R"]),
            float(d["c2"]),
            int(d["n_max"]),
            int(d["k_max"]),
            np.array(d["zeros"], dtype=float),
            np.array(d["norms"], dtype=float),
            int(d.get("quad_points", DEFAULT_QUAD_POINTS)),
        )


@lru_cache(maxsize=16)
def _gauss(npts, R):
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * R * (x + 1.0), 0.5 * R * w


def build_basis(R=1.0, c2=1.0, n_max=8, k_max=20, quad_points=DEFAULT_QUAD_POINTS) -> DiskBasis:
    if not R > 0:
        raise ValueError("radius must be positive")
    if not c2 > 0:
        raise ValueError("c2 must be positive")
    if n_max < 0 or k_max < 1:
        raise ValueError("need n_max >= 0 and k_max >= 1")
    zeros = np.array([bessel_zeros(n, k_max) for n in range(n_max + 1)])
    norms = np.array(
        [0.5 * R * R * bessel_j(n + 1, zeros[n]) ** 2 for n in range(n_max + 1)]
    )
    return DiskBasis(float(R), float(c2), int(n_max), int(k_max), zeros, norms, int(quad_points))


def norm_by_quadrature(basis: DiskBasis, n, k) -> float:
    _, w = basis.nodes
    r = basis.nodes[0]
    return float(np.sum(w * r * basis.node_table[abs(n), k - 1] ** 2))


def eigenpairs(basis: DiskBasis, n_max=None, k_max=None):
    """``(n, k, eigenvalue, normalization)`` for ``0 <= n <= n_max``, ``1 <= k <= k_max``."""
    n_max = basis.n_max if n_max is None else n_max
    k_max = basis.k_max if k_max is None else k_max
    if n_max > basis.n_max or k_max > basis.k_max:
        raise ValueError("basis does not cover the requested range")
    return [
        (n, k, basis.eigenvalue(n, k), basis.norm(n, k))
        for n in range(n_max + 1)
        for k in range(1, k_max + 1)
    ]


@dataclass(frozen=True)
class ModalData:
    """Modal coefficients indexed ``[n + n_max, k - 1]`` for ``-n_max <= n <= n_max``."""

    u0: np.ndarray
    u1: np.ndarray
    n_max: int
    k_max: int

    def coef(self, n, k):
        return self.u0[n + self.n_max, k - 1], self.u1[n + self.n_max, k - 1]

    def hermitian_defect(self) -> float:
        """Max ``|u_{-n,k} - conj(u_{n,k})|`` over both coefficient sets."""
        d0 = np.abs(self.u0[::-1] - np.conj(self.u0)).max()
        d1 = np.abs(self.u1[::-1] - np.conj(self.u1)).max()
        return float(max(d0, d1))

    @classmethod
    def zeros(cls, n_max, k_max) -> "ModalData":
        z = np.zeros((2 * n_max + 1, k_max), dtype=complex)
        return cls(z, z.copy(), n_max, k_max)


def polar_grid(basis: DiskBasis, n_theta: int):
    """Tensor grid: Gauss nodes in ``r``, ``n_theta`` uniform angles."""
    r, _ = basis.nodes
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    return r, theta


def sample(basis: DiskBasis, func, n_theta: int = 64) -> np.ndarray:
    """Sample ``func(r, theta)`` on :func:`polar_grid`; shape ``(n_r, n_theta)``."""
    r, theta = polar_grid(basis, n_theta)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    return np.asarray(func(rr, tt), dtype=float) * np.ones_like(rr)


def project_coefficients(basis: DiskBasis, values, n_max=None, k_max=None) -> np.ndarray:
    """Coefficients ``a_nk`` with ``u = sum a_nk J_|n|(j_nk r/R) e^{i n theta}``.

    ``values`` is sampled on :func:`polar_grid`. The angular Fourier
    transform is followed by weighted Gauss-Legendre quadrature in ``r`` and
    division by the closed-form norm.
    """
    n_max = basis.n_max if n_max is None else n_max
    k_max = basis.k_max if k_max is None else k_max
    values = np.asarray(values)
    n_theta = values.shape[1]
    if n_theta < 2 * n_max + 1:
        raise ValueError(f"need at least {2 * n_max + 1} angles to resolve n_max={n_max}")
    r, w = basis.nodes
    table = basis.node_table
    fourier = np.fft.fft(values, axis=1) / n_theta  # column m holds e^{-i m theta}
    out = np.zeros((2 * n_max + 1, k_max), dtype=complex)
    for n in range(-n_max, n_max + 1):
        cn = fourier[:, n % n_theta]
        integrals = table[abs(n), :k_max] @ (w * r * cn)
        out[n + n_max] = integrals / basis.norms[abs(n), :k_max]
    return out


def reconstruct(basis: DiskBasis, coeffs, r, theta):
    """Complex field ``sum a_nk J_|n|(j_nk r/R) e^{i n theta}`` on broadcast ``(r, theta)``."""
    coeffs = np.asarray(coeffs)
    n_max = (coeffs.shape[0] - 1) // 2
    k_max = coeffs.shape[1]
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    # Tensor grids repeat radii; evaluate the Bessel functions once per radius.
    r_unique, inverse = np.unique(r, return_inverse=True)
    table = basis.radial_table(r_unique, n_max, k_max)
    total = np.zeros(r.shape, dtype=complex)
    for n in range(-n_max, n_max + 1):
        radial = (coeffs[n + n_max] @ table[abs(n)])[inverse.reshape(r.shape)]
        total += radial * np.exp(1j * n * theta)
    return total


def project(basis: DiskBasis, u0_values, u1_values=None, n_max=None, k_max=None, tol=None):
    """Project sampled initial displacement (and velocity) onto the basis.

    Warns if the truncated reconstruction misses a field by more than ``tol``
    (max norm on the sampling grid).
    """
    n_max = basis.n_max if n_max is None else n_max
    k_max = basis.k_max if k_max is None else k_max
    u0_values = np.asarray(u0_values, dtype=float)
    u1_values = np.zeros_like(u0_values) if u1_values is None else np.asarray(u1_values, float)
    a0 = project_coefficients(basis, u0_values, n_max, k_max)
    a1 = project_coefficients(basis, u1_values, n_max, k_max)
    if tol is not None:
        r, theta = polar_grid(basis, u0_values.shape[1])
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        for name, a, vals in (("u0", a0, u0_values), ("u1", a1, u1_values)):
            miss = np.max(np.abs(reconstruct(basis, a, rr, tt).real - vals))
            if miss > tol:
                warnings.warn(
                    f"truncated reconstruction of {name} misses by {miss:.3g} > {tol:g}",
                    RuntimeWarning,
                    stacklevel=2,
                )
    return ModalData(a0, a1, n_max, k_max)


def write_zero_table(path, n_max, k_max):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "k", "zero", "residual"])
        for n, k, z, res in zero_table(n_max, k_max):
            w.writerow([n, k, fmt(z), fmt(res)])


def zero_table(n_max, k_max):
    rows = []
    for n in range(n_max + 1):
        for k, z in enumerate(bessel_zeros(n, k_max), start=1):
            rows.append((n, k, float(z), abs(bessel_j(n, z))))
    return rows
