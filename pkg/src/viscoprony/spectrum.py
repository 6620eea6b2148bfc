"""Spectrum of the viscoelastic wave equation with a Prony-series kernel.

Replacing ``-Laplacian`` by one of its eigenvalues ``lam`` and introducing the
memory variables ``w_i = exp(-r_i t) * u`` turns the modal integro-differential
equation into the linear system ``y' = A y`` with ``y = (u, u', w_1..w_N)``.
The eigenvalues of ``A`` are the roots of ``det(A - zI)``, a polynomial of
degree ``N + 2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from .errors import RootFindingError
from .prony import PronyModel
from .roots import backward_error, horner, polyroots

MAX_DIRECT_LAMBDA = 1e12


def system_template(b, r, lam) -> np.ndarray:
    """Dense ``(N+2) x (N+2)`` system matrix for kernel amplitudes ``b`` and rates ``r``."""
    b = np.asarray(b, dtype=float)
    r = np.asarray(r, dtype=float)
    n = b.size
    a = np.zeros((n + 2, n + 2))
    a[0, 1] = 1.0
    a[1, 0] = -lam
    a[1, 2:] = lam * b
    a[2:, 0] = 1.0
    a[2:, 2:] = np.diag(-r)
    return a


@dataclass(frozen=True)
class SystemMatrix:
    n_terms: int
    lam: float
    entries: np.ndarray = field(repr=False)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))


def _check_lambda(lam):
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"Laplacian eigenvalue must be positive, got {lam!r}")


def assemble_matrix(model: PronyModel, lam: float) -> SystemMatrix:
    _check_lambda(lam)
    return SystemMatrix(model.n_terms, float(lam), system_template(model.b, model.rates, lam))


@dataclass(frozen=True)
class CharPoly:
    """Coefficients of ``det(A_N - zI)``, lowest degree first."""

    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, z):
        return horner(self.coeffs, np.asarray(z, dtype=complex))[0]


def char_poly(model: PronyModel, lam: float) -> CharPoly:
    """Characteristic polynomial by expansion along the last column.

    Starting from ``-z^3 - r_1 z^2 - lam z + lam (b_1 - r_1)`` for one term,

        |A_N - zI| = (-1)^(N+1) lam b_N prod_{i<N} (r_i + z) - (r_N + z) |A_{N-1} - zI|
    """
    _check_lambda(lam)
    b, r = model.b, model.rates
    p = np.array([lam * (b[0] - r[0]), -lam, -r[0], -1.0])
    prod = np.array([r[0], 1.0])
    for n in range(2, model.n_terms + 1):
        i = n - 1
        p = P.polysub((-1) ** (n + 1) * lam * b[i] * prod, P.polymul([r[i], 1.0], p))
        prod = P.polymul(prod, [r[i], 1.0])
    return CharPoly(np.asarray(p, dtype=float))


def _sort_key(z):
    return (-z.real, z.imag)


def sort_eigenvalues(z) -> np.ndarray:
    """Real part descending, then imaginary part ascending."""
    return np.array(sorted(np.asarray(z, dtype=complex), key=_sort_key))


@dataclass(frozen=True)
class SpectrumResult:
    model: PronyModel = field(repr=False)
    lam: float
    poly: CharPoly = field(repr=False)
    eigenvalues: np.ndarray
    residuals: np.ndarray = field(repr=False)
    backward_errors: np.ndarray = field(repr=False)
    asymptotic: bool = False

    @property
    def sum_check(self) -> float:
        """``sum z_i + sum r_i``; vanishes by the trace identity.

        Not defined for the asymptotic route, whose complex pair omits the
        bounded real part.
        """
        if self.asymptotic:
            return float("nan")
        return float(np.sum(self.eigenvalues).real + np.sum(self.model.rates))

    @property
    def null_check(self) -> float:
        """``min |z_i| / max |z_i|``; vanishes for normalized models."""
        mag = np.abs(self.eigenvalues)
        return float(mag.min() / mag.max())


def eigenvalues(model: PronyModel, lam: float) -> SpectrumResult:
    """All ``N + 2`` eigenvalues for Laplacian eigenvalue ``lam``.

    Raises
    ------
    ValueError
        For ``lam <= 0`` or ``lam > 1e12`` (use :func:`asymptotic_spectrum`).
    RootFindingError
        If the root finder fails; the exception carries the polynomial.
    """
    _check_lambda(lam)
    if lam > MAX_DIRECT_LAMBDA:
        raise ValueError(
            f"lambda={lam:g} exceeds {MAX_DIRECT_LAMBDA:g}; use asymptotic_spectrum"
        )
    poly = char_poly(model, lam)
    z = sort_eigenvalues(polyroots(poly.coeffs))
    resid = np.abs(poly(z)) / poly.scale
    berr = backward_error(poly.coeffs, z)
    return SpectrumResult(model, float(lam), poly, z, resid, berr)


def limit_spectrum(model: PronyModel) -> np.ndarray:
    """Real roots of ``sum_i b_i / (z + r_i) = 1``, descending.

    Clearing denominators gives the degree-``N`` polynomial
    ``prod (z + r_i) - sum_i b_i prod_{j != i} (z + r_j)``. For a normalized
    model the largest root is 0 and the others interlace the poles ``-r_i``.
    """
    if not model.normalized:
        raise ValueError("limit spectrum requires a normalized model")
    b, r = model.b, model.rates
    full = P.polyfromroots(-r)
    q = np.zeros(1)
    for i in range(model.n_terms):
        q = P.polyadd(q, b[i] * P.polyfromroots(np.delete(-r, i)))
    poly = P.polysub(full, q)
    z = polyroots(poly)
    scale = max(1.0, float(np.max(np.abs(z))))
    if np.any(np.abs(z.imag) > 1e-10 * scale):
        raise RootFindingError("limit spectrum has complex roots", coeffs=list(poly))
    return np.sort(z.real)[::-1]


def asymptotic_spectrum(model: PronyModel, lam: float) -> SpectrumResult:
    """Large-``lam`` spectrum: limit-spectrum roots plus the pair ``±i sqrt(lam)``."""
    _check_lambda(lam)
    real = limit_spectrum(model)
    pair = np.array([1j * np.sqrt(lam), -1j * np.sqrt(lam)])
    z = sort_eigenvalues(np.concatenate([real.astype(complex), pair]))
    nan = np.full(z.size, np.nan)
    return SpectrumResult(model, float(lam), CharPoly(np.array([np.nan])), z, nan, nan, True)


def spectrum(model: PronyModel, lam: float) -> SpectrumResult:
    """Direct spectrum below ``1e12``, asymptotic route above."""
    if lam > MAX_DIRECT_LAMBDA:
        return asymptotic_spectrum(model, lam)
    return eigenvalues(model, lam)


@dataclass(frozen=True)
class BranchTrace:
    lams: np.ndarray
    branches: np.ndarray  # shape (len(lams), N + 2); column j follows one branch
    results: list = field(repr=False)


def _match(prev, cur, amb_tol=1e-6):
    cost = np.abs(prev[:, None] - cur[None, :])
    rows, cols = linear_sum_assignment(cost)
    for i, j in zip(rows, cols):
        d = np.sort(cost[i])
        if d.size > 1 and d[1] - d[0] < amb_tol and cost[i, j] > amb_tol:
            warnings.warn(
                f"ambiguous branch pairing near z={prev[i]:.6g}", RuntimeWarning, stacklevel=3
            )
    out = np.empty_like(cur)
    out[rows] = cur[cols]
    return out


def branch_trace(
    model: PronyModel, lams: Sequence[float], max_ratio: float = 1.25
) -> BranchTrace:
    """Follow each eigenvalue as ``lam`` increases.

    Eigenvalues at consecutive ``lam`` are paired by minimum total distance.
    Intermediate values (geometric ratio at most ``max_ratio``) are solved
    internally so that branches stay continuous over large jumps; only the
    requested values are reported.
    """
    lams = np.asarray(lams, dtype=float)
    if lams.size == 0:
        raise ValueError("need at least one lambda")
    if np.any(lams <= 0) or np.any(np.diff(lams) <= 0):
        raise ValueError("lambda values must be positive and increasing")
    first = eigenvalues(model, lams[0])
    cur = first.eigenvalues
    rows, results = [cur], [first]
    for lo, hi in zip(lams[:-1], lams[1:]):
        steps = max(1, int(np.ceil(np.log(hi / lo) / np.log(max_ratio))))
        for lam in np.geomspace(lo, hi, steps + 1)[1:-1]:
            cur = _match(cur, eigenvalues(model, lam).eigenvalues)
        res = eigenvalues(model, hi)
        cur = _match(cur, res.eigenvalues)
        rows.append(cur)
        results.append(res)
    return BranchTrace(lams, np.array(rows), results)


SPECTRUM_COLUMNS = ["N", "lambda", "re", "im", "residual", "sum_check", "null_check", "flag"]


def spectrum_rows(results: Sequence[SpectrumResult]) -> list[list]:
    rows = []
    for res in results:
        flag = "asymptotic" if res.asymptotic else "direct"
        for z, resid in zip(res.eigenvalues, res.residuals):
            rows.append(
                [
                    res.model.n_terms,
                    res.lam,
                    z.real,
                    z.imag,
                    resid,
                    res.sum_check,
                    res.null_check,
                    flag,
                ]
            )
    return rows


def spectrum_record(res: SpectrumResult) -> dict:
    return {
        "N": res.model.n_terms,
        "lambda": res.lam,
        "eigenvalues": [{"re": z.real, "im": z.imag} for z in res.eigenvalues],
        "sum_check": res.sum_check,
        "null_check": res.null_check,
        "flag": "asymptotic" if res.asymptotic else "direct",
    }
