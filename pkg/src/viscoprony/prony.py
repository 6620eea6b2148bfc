"""Exponential-sum (Prony series) relaxation models.

A model is a list of terms ``(s_i, r_i)`` describing the stress relaxation
modulus ``E(t) = sum_i s_i exp(-r_i t)``. The memory kernel is
``m(t) = -E'(t) = sum_i b_i exp(-r_i t)`` with ``b_i = s_i r_i`` and the
instantaneous modulus is ``c2 = E(0) = sum_i s_i``.

The module also fits such a series to the stretched exponential
``exp(-t**beta)`` by nonnegative least squares over a log-spaced rate grid.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import nnls

from ._format import fmt, jsonable
from .errors import FitError

NORMALIZATION_TOL = 1e-12

DEFAULT_GRID = (1e-3, 1e2, 200)


def _check_beta(beta):
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"stretching exponent must lie in (0, 1], got {beta!r}")


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("time must be nonnegative")
    return t


@dataclass(frozen=True)
class StretchedExponential:
    """Relaxation law ``exp(-t**beta)``."""

    beta: float

    def __post_init__(self):
        _check_beta(self.beta)

    def __call__(self, t):
        return eval_stretched(self.beta, t)


def eval_stretched(beta, t):
    """Evaluate ``exp(-t**beta)``; accepts scalars or arrays."""
    _check_beta(beta)
    t = _check_time(t)
    out = np.exp(-np.power(t, beta))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PronyModel:
    """Normalized or unnormalized exponential-sum relaxation model.

    Parameters
    ----------
    s : tuple of float
        Nonnegative weights of the modulus terms.
    r : tuple of float
        Positive, pairwise distinct decay rates (1/time).
    """

    s: tuple
    r: tuple

    def __post_init__(self):
        s = tuple(float(v) for v in self.s)
        r = tuple(float(v) for v in self.r)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "r", r)
        if len(s) != len(r) or not s:
            raise ValueError("need the same, nonzero number of weights and rates")
        if any(not np.isfinite(v) or v <= 0 for v in r):
            raise ValueError("rates must be positive and finite")
        if any(not np.isfinite(v) or v < 0 for v in s):
            raise ValueError("weights must be nonnegative and finite")
        if not any(v > 0 for v in s):
            raise ValueError("at least one weight must be positive")
        if len(set(r)) != len(r):
            raise ValueError("rates must be pairwise distinct")

    @classmethod
    def from_kernel(cls, b: Sequence[float], r: Sequence[float]) -> "PronyModel":
        """Build from kernel amplitudes ``b_i`` (so that ``s_i = b_i / r_i``)."""
        b = np.asarray(b, dtype=float)
        r = np.asarray(r, dtype=float)
        if b.shape != r.shape:
            raise ValueError("b and r must have the same length")
        if np.any(r <= 0):
            raise ValueError("rates must be positive")
        return cls(tuple(b / r), tuple(r))

    @classmethod
    def from_terms(cls, s, r) -> "PronyModel":
        """Build from possibly repeated rates, merging duplicates and dropping zero weights."""
        merged: dict[float, float] = {}
        for si, ri in zip(s, r):
            merged[float(ri)] = merged.get(float(ri), 0.0) + float(si)
        rates = sorted(k for k, v in merged.items() if v > 0)
        return cls(tuple(merged[k] for k in rates), tuple(rates))

    @property
    def n_terms(self) -> int:
        return len(self.r)

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.s) * np.asarray(self.r)

    @property
    def rates(self) -> np.ndarray:
        return np.asarray(self.r)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.s)

    @property
    def c2(self) -> float:
        return float(sum(self.s))

    @property
    def normalized(self) -> bool:
        return abs(self.c2 - 1.0) <= NORMALIZATION_TOL

    def normalize(self) -> "PronyModel":
        c2 = self.c2
        return PronyModel(tuple(v / c2 for v in self.s), self.r)

    def modulus(self, t):
        return eval_modulus(self, t)

    def kernel(self, t):
        return eval_kernel(self, t)

    def to_dict(self) -> dict:
        return {
            "terms": [{"s": s, "r": r} for s, r in zip(self.s, self.r)],
            "normalized": self.normalized,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PronyModel":
        terms = data["terms"]
        return cls(tuple(t["s"] for t in terms), tuple(t["r"] for t in terms))

    def to_json(self, **kw) -> str:
        # Full precision so the null-eigenvalue property survives a round trip.
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "PronyModel":
        return cls.from_dict(json.loads(text))


def _sum_exp(coeffs, rates, t):
    t = _check_time(t)
    out = np.exp(-np.multiply.outer(t, rates)) @ coeffs
    return float(out) if out.ndim == 0 else out


def eval_modulus(model: PronyModel, t):
    """Relaxation modulus ``sum s_i exp(-r_i t)``."""
    return _sum_exp(model.weights, model.rates, t)


def eval_kernel(model: PronyModel, t):
    """Memory kernel ``sum b_i exp(-r_i t)``, i.e. minus the modulus derivative."""
    return _sum_exp(model.b, model.rates, t)


@dataclass(frozen=True)
class FitReport:
    model: PronyModel
    grid: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)
    fitted: np.ndarray = field(repr=False)
    max_abs_error: float
    residual_l2: float
    beta: float

    def rows(self):
        err = np.abs(self.fitted - self.target)
        return zip(self.grid, self.target, self.fitted, err)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "target", "fitted", "abs_error"])
            for row in self.rows():
                w.writerow([fmt(v) for v in row])

    def summary(self) -> dict:
        return jsonable(
            {
                "beta": self.beta,
                "n_terms": self.model.n_terms,
                "max_abs_error": self.max_abs_error,
                "residual_l2": self.residual_l2,
            }
        )


def log_grid(t_min=DEFAULT_GRID[0], t_max=DEFAULT_GRID[1], n=DEFAULT_GRID[2]) -> np.ndarray:
    if not (0 < t_min < t_max):
        raise ValueError("need 0 < t_min < t_max")
    return np.logspace(np.log10(t_min), np.log10(t_max), int(n))


def candidate_rates(grid, per_decade=8) -> np.ndarray:
    """Decade-aligned log-spaced rates covering the reciprocal time range.

    The range always contains the unit rate, the natural scale of
    ``exp(-t**beta)``.
    """
    grid = np.asarray(grid, dtype=float)
    lo = min(np.floor(np.log10(1.0 / grid[-1])), 0.0)
    hi = max(np.ceil(np.log10(1.0 / grid[0])), 0.0)
    n = int(round((hi - lo) * per_decade)) + 1
    # Exact powers of ten on the decade boundaries.
    exps = lo + np.arange(n) / per_decade
    return 10.0**exps


def _constrained_nnls(design, target, weight):
    """NNLS with a heavily weighted row enforcing ``sum s_i = 1``."""
    a = np.vstack([design, weight * np.ones(design.shape[1])])
    y = np.concatenate([target, [weight]])
    s, _ = nnls(a, y, maxiter=50 * a.shape[1])
    return s


def fit_prony(
    beta: float,
    n_terms: int,
    grid: Iterable[float] | None = None,
    rate_strategy: str | Sequence[float] = "greedy",
    per_decade: int = 8,
) -> FitReport:
    """Fit a normalized Prony series to ``exp(-t**beta)`` on ``grid``.

    Parameters
    ----------
    beta : float
        Stretching exponent in (0, 1].
    n_terms : int
        Maximum number of exponential terms.
    grid : array_like, optional
        Strictly increasing positive sample times; defaults to 200 log-spaced
        points on [1e-3, 1e2].
    rate_strategy : {"greedy", "uniform"} or sequence of float
        ``"greedy"`` grows the support one rate at a time from a fixed
        decade-aligned candidate grid, keeping the rate that most reduces the
        misfit (nested supports, so the misfit never increases with
        ``n_terms``). ``"uniform"`` uses ``n_terms`` log-spaced rates spanning
        the reciprocal grid extremes. A sequence is taken as the candidate
        grid for the greedy search.

    Returns
    -------
    FitReport
        Zero-weight terms are dropped, weights renormalized to sum to one.
    """
    _check_beta(beta)
    n_terms = int(n_terms)
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    grid = log_grid() if grid is None else np.asarray(list(grid), dtype=float)
    if grid.ndim != 1 or grid.size < 2 * n_terms:
        raise ValueError(f"grid needs at least {2 * n_terms} points")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing and positive")

    target = np.exp(-grid**beta)
    weight = 1e3 * np.sqrt(grid.size)

    if isinstance(rate_strategy, str) and rate_strategy == "uniform":
        rates = np.logspace(np.log10(1.0 / grid[-1]), np.log10(1.0 / grid[0]), n_terms)
        if n_terms == 1:
            rates = np.array([1.0])
        s = _constrained_nnls(np.exp(-np.outer(grid, rates)), target, weight)
    else:
        if isinstance(rate_strategy, str):
            if rate_strategy != "greedy":
                raise ValueError(f"unknown rate strategy {rate_strategy!r}")
            cand = candidate_rates(grid, per_decade)
        else:
            cand = np.unique(np.asarray(rate_strategy, dtype=float))
            if cand.size == 0 or np.any(cand <= 0):
                raise ValueError("candidate rates must be positive")
        basis = np.exp(-np.outer(grid, cand))
        chosen: list[int] = []
        s = np.zeros(0)
        best_res = np.inf
        for _ in range(min(n_terms, cand.size)):
            best = None
            for j in range(cand.size):
                if j in chosen:
                    continue
                idx = chosen + [j]
                sj = _constrained_nnls(basis[:, idx], target, weight)
                res = np.linalg.norm(basis[:, idx] @ sj - target)
                # Ties go to the smaller rate: candidates are sorted ascending.
                if best is None or res < best[0] * (1 - 1e-13):
                    best = (res, j, sj)
            if best is None or best[0] >= best_res:
                break
            best_res, j, s = best
            chosen.append(j)
        rates = cand[chosen]

    if not np.any(s > 0):
        raise FitError("constrained least-squares fit returned the zero model")
    model = PronyModel.from_terms(s, rates).normalize()
    fitted = eval_modulus(model, grid)
    err = fitted - target
    return FitReport(
        model=model,
        grid=grid,
        target=target,
        fitted=fitted,
        max_abs_error=float(np.max(np.abs(err))),
        residual_l2=float(np.linalg.norm(err)),
        beta=float(beta),
    )
