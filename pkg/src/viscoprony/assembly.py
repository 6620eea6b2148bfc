"""Fourier-Bessel solution of the Burgers-kernel wave equation on a disk.

Each disk mode ``(n, k)`` evolves independently with Laplacian eigenvalue
``lam_nk = c2 (j_nk / R)^2``. Complex modal data are split into real and
imaginary parts, each solved by the closed form in :mod:`viscoprony.burgers`.

The closed forms are checked against a fourth-order Runge-Kutta integration
of the augmented first-order system

    u' = v,  v' = -lam u + lam (b1 w1 + b2 w2),  w_i' = u - r_i w_i,

which never touches the cubic or its roots.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from ._format import fmt, jsonable
from .burgers import ModeSolution, eval_mode, quartic_residuals, solve_mode
from .disk import DiskBasis, ModalData
from .errors import DegenerateRootsError, OracleInstability
from .spectrum import system_template

BLOWUP = 1e12
DEFAULT_RECORDS = 2000


@dataclass(frozen=True)
class DiskSolution:
    basis: DiskBasis = field(repr=False)
    modes: dict = field(repr=False)  # (n, k) -> (ModeSolution for Re data, ModeSolution for Im data)
    n_max: int
    k_max: int

    def mode_value(self, n, k, t):
        re, im = self.modes[(n, k)]
        return eval_mode(re, t) + 1j * eval_mode(im, t)

    def hermitian_defect(self) -> float:
        worst = 0.0
        for (n, k), (re, im) in self.modes.items():
            re2, im2 = self.modes[(-n, k)]
            worst = max(
                worst,
                abs(re.R1 - re2.R1) + abs(re.R2 - re2.R2) + abs(re.C - re2.C),
                abs(im.R1 + im2.R1) + abs(im.R2 + im2.R2) + abs(im.C + im2.C),
            )
        return worst


def _tail_warning(basis, modal):
    """Warn when modal data decay slower than ``1 / lam_nk`` in ``k``."""
    for coeffs, name in ((modal.u0, "u0"), (modal.u1, "u1")):
        mag = np.abs(coeffs)
        if modal.k_max < 2 or mag.max() == 0:
            continue
        lam = np.array([[basis.eigenvalue(n, k) for k in range(1, modal.k_max + 1)]
                        for n in range(-modal.n_max, modal.n_max + 1)])
        weighted = mag * lam
        if weighted[:, -1].max() > weighted.max() * 0.5 and weighted[:, -1].max() > 1e-12:
            warnings.warn(
                f"modal tail of {name} decays slower than 1/lambda_nk; truncation may be poor",
                RuntimeWarning,
                stacklevel=3,
            )


def build_solution(derived, basis: DiskBasis, modal: ModalData) -> DiskSolution:
    """Solve every disk mode in the truncation of ``modal``.

    Raises
    ------
    ValueError
        If the modal data are not Hermitian-symmetric, the basis does not
        cover them, or the basis was built for another ``c2``.
    DegenerateRootsError
        Carrying the offending ``(n, k)`` in its message.
    """
    if modal.n_max > basis.n_max or modal.k_max > basis.k_max:
        raise ValueError("basis does not cover the modal truncation")
    if abs(basis.c2 - derived.c2) > 1e-12 * derived.c2:
        raise ValueError(f"basis c2={basis.c2:g} differs from model c2={derived.c2:g}")
    scale = max(np.abs(modal.u0).max(), np.abs(modal.u1).max(), 1.0)
    if modal.hermitian_defect() > 1e-10 * scale:
        raise ValueError("modal data are not Hermitian-symmetric")
    _tail_warning(basis, modal)
    modes = {}
    for n in range(-modal.n_max, modal.n_max + 1):
        for k in range(1, modal.k_max + 1):
            a0, a1 = modal.coef(n, k)
            lam = basis.eigenvalue(n, k)
            try:
                re = solve_mode(derived, lam, float(np.real(a0)), float(np.real(a1)))
                im = solve_mode(derived, lam, float(np.imag(a0)), float(np.imag(a1)))
            except DegenerateRootsError as exc:
                raise DegenerateRootsError(f"mode (n={n}, k={k}): {exc}", lam=lam) from exc
            modes[(n, k)] = (re, im)
    return DiskSolution(basis, modes, modal.n_max, modal.k_max)


def evaluate_complex(sol: DiskSolution, t, r, theta):
    """Complex partial sum; its imaginary part vanishes up to rounding."""
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    if np.any(r < 0) or np.any(r > sol.basis.R * (1 + 1e-14)):
        raise ValueError("radius outside the disk")
    r_unique, inverse = np.unique(r, return_inverse=True)
    inverse = inverse.reshape(r.shape)
    table = sol.basis.radial_table(r_unique, sol.n_max, sol.k_max)
    total = np.zeros(r.shape, dtype=complex)
    for n in range(-sol.n_max, sol.n_max + 1):
        amps = np.array([sol.mode_value(n, k, t) for k in range(1, sol.k_max + 1)])
        total += (amps @ table[abs(n)])[inverse] * np.exp(1j * n * theta)
    return total


def evaluate(sol: DiskSolution, t, r, theta):
    """Real displacement ``u(t, r, theta)``."""
    val = evaluate_complex(sol, t, r, theta).real
    return float(val) if val.ndim == 0 else val


def write_solution_csv(path, sol: DiskSolution, times, radii, thetas):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "r", "theta", "u"])
        rr, tt = np.meshgrid(radii, thetas, indexing="ij")
        for t in times:
            u = evaluate(sol, t, rr, tt)
            for i, r in enumerate(radii):
                for j, th in enumerate(thetas):
                    w.writerow([fmt(t), fmt(r), fmt(th), fmt(u[i, j])])


# Time-domain oracle ---------------------------------------------------------


@dataclass(frozen=True)
class OracleTrace:
    t: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)  # columns u, u', w1, w2
    dt: float
    lam: float

    @property
    def u(self):
        return self.states[:, 0]


def augmented_matrix(kernel, lam) -> np.ndarray:
    return system_template([kernel.b1, kernel.b2], [kernel.r1, kernel.r2], lam)


def rk4_step(f, y, h):
    """One classical Runge-Kutta step for the autonomous system ``y' = f(y)``."""
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def suggest_dt(kernel, lam, t_end=20.0, tol=1e-9, dt_max=1e-3) -> float:
    """Step size whose predicted RK4 global error over ``[0, t_end]`` is below ``tol``.

    Uses the local error ``|h z|^5 / 120`` of the fastest mode ``z``.
    """
    zmax = np.max(np.abs(np.linalg.eigvals(augmented_matrix(kernel, lam))))
    h = (120.0 * tol / (max(t_end, 1.0) * zmax**5)) ** 0.25
    return float(min(dt_max, h))


def integrate_mode_oracle(kernel, lambda_n, u0n, u1n, t_end, dt, records=DEFAULT_RECORDS):
    """RK4 trace of the augmented system started from ``(u0n, u1n, 0, 0)``.

    The system is linear and autonomous, so the RK4 update is a fixed matrix
    obtained by applying :func:`rk4_step` to the identity. Steps between
    recorded times are taken in blocks by powers of that matrix.

    ``dt`` is shrunk so that a whole number of steps fits between records.
    """
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    a = augmented_matrix(kernel, lambda_n)
    n_steps = max(1, int(math.ceil(t_end / dt)))
    n_rec = min(records, n_steps)
    stride = int(math.ceil(n_steps / n_rec))
    n_steps = stride * n_rec
    h = t_end / n_steps
    step = rk4_step(lambda y: a @ y, np.eye(4), h)
    block = np.linalg.matrix_power(step, stride)
    states = np.empty((n_rec + 1, 4))
    states[0] = [u0n, u1n, 0.0, 0.0]
    for i in range(n_rec):
        states[i + 1] = block @ states[i]
        if not np.all(np.abs(states[i + 1]) < BLOWUP):
            raise OracleInstability(f"RK4 state exceeded {BLOWUP:g} at t={(i + 1) * stride * h:g}")
    t = np.linspace(0.0, t_end, n_rec + 1)
    return OracleTrace(t, states, h, float(lambda_n))


def volterra_residual(kernel, sol: ModeSolution, t_end, h):
    """Residual of the modal integro-differential equation on ``[0, t_end]``.

    The memory integrals ``int_0^t exp(-r (t - s)) u(s) ds`` use the
    trapezoid rule on a uniform grid; ``u''`` comes from the closed form.
    Returns the max residual divided by ``lam * max|u|``.
    """
    n = max(2, int(math.ceil(t_end / h)))
    t = np.linspace(0.0, t_end, n + 1)
    h = t[1] - t[0]
    u = eval_mode(sol, t)
    lam = sol.lambda_n
    conv = []
    for b, r in ((kernel.b1, kernel.r1), (kernel.b2, kernel.r2)):
        if b == 0:
            conv.append(np.zeros_like(t))
            continue
        decay = math.exp(-r * h)
        # acc[j+1] = decay * acc[j] + h/2 (decay u[j] + u[j+1]) as a first-order filter.
        acc = np.zeros_like(t)
        acc[1:] = lfilter([1.0], [1.0, -decay], 0.5 * h * (decay * u[:-1] + u[1:]))
        conv.append(b * acc)
    res = sol.derivative(t, 2) + lam * u - lam * (conv[0] + conv[1])
    scale = lam * max(np.max(np.abs(u)), np.finfo(float).tiny)
    return float(np.max(np.abs(res)) / scale)


def compare_mode(kernel, sol: ModeSolution, t_end=20.0, dt=None, tol=1e-9):
    """Closed form vs RK4 oracle for one real-data mode.

    ``halving_change`` is the change of the displacement endpoint ``u(t_end)``
    when the step is halved; ``state_halving_change`` covers all four states,
    whose velocity component carries a rounding floor of order
    ``steps * eps * |u'|`` for large ``lam``.
    """
    if dt is None:
        dt = suggest_dt(kernel, sol.lambda_n, t_end, tol)
    trace = integrate_mode_oracle(kernel, sol.lambda_n, sol.u0n, sol.u1n, t_end, dt)
    half = integrate_mode_oracle(kernel, sol.lambda_n, sol.u0n, sol.u1n, t_end, trace.dt / 2)
    closed = eval_mode(sol, trace.t)
    return {
        "max_discrepancy": float(np.max(np.abs(closed - trace.u))),
        "halving_change": float(abs(half.u[-1] - trace.u[-1])),
        "state_halving_change": float(np.max(np.abs(half.states[-1] - trace.states[-1]))),
        "dt": trace.dt,
    }


def validate(sol: DiskSolution, derived, t_end=20.0, dt=None, tol=1e-6, n_theta=16,
             volterra=True):
    """Per-mode oracle comparison plus boundary and characteristic-root checks.

    Modes with all-zero data are skipped in the oracle comparison. ``dt=None``
    picks a step per mode via :func:`suggest_dt`.
    """
    rows = []
    seen = set()
    r1r2 = derived.r1 + derived.r2
    # n >= 0 first so each (|n|, k) pair is checked on its nonnegative member.
    for (n, k), parts in sorted(sol.modes.items(), key=lambda kv: (abs(kv[0][0]), kv[0][1], -kv[0][0])):
        if (abs(n), k) in seen:
            continue
        seen.add((abs(n), k))
        lam = parts[0].lambda_n
        roots = parts[0].char_roots
        row = {
            "n": abs(n),
            "k": k,
            "lambda": lam,
            "root_sum_error": abs(sum(roots) + r1r2),
            "quartic_residual": float(quartic_residuals(derived, lam, roots).max()),
            "max_discrepancy": 0.0,
            "halving_change": 0.0,
            "volterra_residual": 0.0,
        }
        for part in parts:
            if part.u0n == 0 and part.u1n == 0:
                continue
            cmp = compare_mode(derived, part, t_end, None if dt is None else dt)
            row["max_discrepancy"] = max(row["max_discrepancy"], cmp["max_discrepancy"])
            row["halving_change"] = max(row["halving_change"], cmp["halving_change"])
            row["dt"] = cmp["dt"]
            if volterra:
                h = min(1e-3, 0.02 / math.sqrt(lam))
                row["volterra_residual"] = max(
                    row["volterra_residual"], volterra_residual(derived, part, t_end, h)
                )
        row["ok"] = bool(
            row["max_discrepancy"] <= tol
            and row["halving_change"] <= 1e-8
            and row["root_sum_error"] <= 1e-8 * r1r2
            and row["volterra_residual"] <= 1e-4
        )
        rows.append(row)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    times = np.linspace(0.0, t_end, 5)
    boundary = max(float(np.max(np.abs(evaluate(sol, t, sol.basis.R, theta)))) for t in times)
    amplitude = max(
        max(abs(p.u0n) + abs(p.u1n) for p in parts) for parts in sol.modes.values()
    )
    report = {
        "t_end": t_end,
        "modes": rows,
        "max_mode_discrepancy": max((r["max_discrepancy"] for r in rows), default=0.0),
        "boundary_max": boundary,
        "amplitude": amplitude,
        "boundary_ok": boundary <= 1e-8 * max(amplitude, np.finfo(float).tiny),
    }
    report["ok"] = bool(all(r["ok"] for r in rows) and report["boundary_ok"])
    return report


def report_json(report) -> dict:
    return jsonable(report)
