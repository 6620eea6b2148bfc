"""Simultaneous polynomial root finding (Aberth-Ehrlich) with a companion fallback.

Coefficients are stored lowest degree first throughout the package.
"""

from __future__ import annotations

import numpy as np

from .errors import RootFindingError


def horner(coeffs, z):
    """Evaluate ``p(z)`` and ``p'(z)`` for coefficients lowest-first."""
    p = np.zeros_like(z, dtype=complex) + coeffs[-1]
    dp = np.zeros_like(p)
    for a in coeffs[-2::-1]:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def backward_error(coeffs, z):
    """``|p(z)| / sum |a_i| |z|^i``: the relative backward error of a root."""
    z = np.asarray(z, dtype=complex)
    p, _ = horner(coeffs, z)
    scale, _ = horner(np.abs(coeffs), np.abs(z))
    return np.abs(p) / np.maximum(np.abs(scale), np.finfo(float).tiny)


def normwise_backward_error(coeffs, z):
    """``|p(z)| / (sum |a_i| * max(1, |z|)^n)``, the coefficient-norm backward error."""
    z = np.asarray(z, dtype=complex)
    p, _ = horner(coeffs, z)
    n = len(coeffs) - 1
    return np.abs(p) / (np.sum(np.abs(coeffs)) * np.maximum(1.0, np.abs(z)) ** n)


def _initial_guesses(c):
    n = len(c) - 1
    # Fujiwara bound on the root moduli of the (already scaled) polynomial.
    ratios = [abs(c[n - k] / c[n]) ** (1.0 / k) for k in range(1, n + 1)]
    ratios[-1] *= 0.5 ** (1.0 / n)
    radius = 2.0 * max(ratios)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    return radius * 0.5 * np.exp(1j * angles)


def aberth(coeffs, tol=1e-12, max_iter=500):
    """Aberth-Ehrlich iteration; returns ``(roots, converged)``."""
    c = np.asarray(coeffs, dtype=complex)
    n = len(c) - 1
    z = _initial_guesses(c)
    # Roots are frozen individually once their update falls below tolerance.
    active = np.ones(n, dtype=bool)
    tiny = np.finfo(float).eps * np.max(np.abs(z))
    for _ in range(max_iter):
        p, dp = horner(c, z[active])
        ratio = np.where(dp != 0, p / np.where(dp == 0, 1, dp), 0)
        diff = z[active][:, None] - z[None, :]
        idx = np.flatnonzero(active)
        diff[np.arange(idx.size), idx] = 1.0
        repulsion = np.sum(1.0 / diff, axis=1) - 1.0
        w = ratio / (1.0 - ratio * repulsion)
        z[active] -= w
        done = np.abs(w) <= tol * np.abs(z[active]) + tiny
        active[idx[done]] = False
        if not active.any():
            return z, True
    return z, False


def companion_roots(coeffs):
    c = np.asarray(coeffs, dtype=float)
    n = len(c) - 1
    mat = np.zeros((n, n))
    mat[1:, :-1] = np.eye(n - 1)
    mat[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(mat)


def _newton_polish(c, z, steps=8):
    # Several steps: a root much smaller than the others is only located to
    # an absolute accuracy by the iteration, and Newton converges quadratically.
    for _ in range(steps):
        p, dp = horner(c, z)
        ok = dp != 0
        step = np.where(ok, p / np.where(ok, dp, 1), 0)
        # Only keep steps that do not increase the residual.
        trial = z - step
        pt, _ = horner(c, trial)
        z = np.where(np.abs(pt) <= np.abs(p), trial, z)
    return z


def _symmetrize(z, scale):
    """Snap near-real roots to the real axis and pair conjugates exactly."""
    z = z.copy()
    near_real = np.abs(z.imag) <= 1e-10 * np.maximum(np.abs(z), scale * 1e-3)
    z[near_real] = z[near_real].real
    upper = np.flatnonzero(z.imag > 0)
    lower = list(np.flatnonzero(z.imag < 0))
    for i in upper:
        if not lower:
            break
        j = min(lower, key=lambda k: abs(z[k] - np.conj(z[i])))
        lower.remove(j)
        m = 0.5 * (z[i] + np.conj(z[j]))
        z[i], z[j] = m, np.conj(m)
    return z


def polyroots(coeffs, tol=1e-12, real_coeffs=True):
    """All roots of a polynomial given lowest-first coefficients.

    The coefficients are scaled by their largest magnitude, roots are found
    by Aberth-Ehrlich iteration (companion-matrix eigenvalues if that does
    not converge), then polished by Newton steps on the unscaled polynomial.

    Raises
    ------
    RootFindingError
        If neither method produces roots with normwise backward error below
        ``1e-9``.
    """
    c = np.asarray(coeffs, dtype=float if real_coeffs else complex)
    c = np.trim_zeros(c, "b")
    if c.size < 2:
        raise ValueError("polynomial must have degree at least 1")
    # Exact zero roots are split off so the iteration sees a nonzero constant.
    n_zero = 0
    while c[0] == 0:
        c = c[1:]
        n_zero += 1
    if c.size == 1:
        return np.zeros(n_zero, dtype=complex)
    scaled = c / np.max(np.abs(c))
    z, ok = aberth(scaled, tol=tol)
    if not ok or not np.all(np.isfinite(z)):
        z = companion_roots(scaled) if real_coeffs else np.roots(scaled[::-1])
    z = _newton_polish(scaled, np.asarray(z, dtype=complex))
    if real_coeffs:
        z = _symmetrize(z, np.max(np.abs(z)))
    berr = normwise_backward_error(scaled, z)
    if not np.all(np.isfinite(z)) or np.max(berr) > 1e-9:
        raise RootFindingError(
            f"root finder failed (max backward error {np.max(berr):.3g})", coeffs=list(coeffs)
        )
    return np.concatenate([np.zeros(n_zero, dtype=complex), z])
