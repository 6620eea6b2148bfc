import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.integrate import quad

from viscoprony.burgers import (
    MODE_TABLE_COLUMNS,
    BurgersDerived,
    BurgersParameters,
    KernelPair,
    asymptotic_roots,
    cubic_coefficients,
    derive,
    eval_mode,
    mode_coefficients,
    mode_roots,
    mode_table,
    quartic_residuals,
    solve_mode,
    write_mode_table,
)
from viscoprony.errors import DegenerateRootsError
from viscoprony.spectrum import eigenvalues

from conftest import burgers_params

UNIT = derive(BurgersParameters(1.0, 1.0, 1.0, 1.0))


def newton_real_root(coeffs, z, steps=60):
    """Plain Newton iteration on a monic cubic (lowest-first coefficients)."""
    c0, c1, c2 = coeffs
    for _ in range(steps):
        p = ((z + c2) * z + c1) * z + c0
        dp = (3 * z + 2 * c2) * z + c1
        z = z - p / dp
    return z


def solve_nondegenerate(kernel, lam, u0, u1):
    roots = mode_roots(kernel, lam)
    assume(not roots.degenerate)
    return solve_mode(kernel, lam, u0, u1)


# derived constants --------------------------------------------------------------------


def test_unit_example():
    d = UNIT
    assert (d.p1, d.p2, d.q1, d.q2) == (3.0, 1.0, 1.0, 1.0)
    assert d.A == pytest.approx(math.sqrt(5), rel=1e-15)
    assert d.r1 == pytest.approx((3 - math.sqrt(5)) / 2, rel=1e-14)
    assert d.r2 == pytest.approx((3 + math.sqrt(5)) / 2, rel=1e-14)
    assert d.c2 == 1.0
    assert d.b1 == pytest.approx(0.105573, abs=1e-6)
    assert d.b2 == pytest.approx(1.894427, abs=1e-6)
    assert d.b1 / d.r1 + d.b2 / d.r2 == pytest.approx(1.0, abs=1e-15)
    assert d.accumulation == pytest.approx(-1.0, abs=1e-14)
    assert d.alpha == 0.0


@given(burgers_params)
def test_derived_invariants(params):
    E1, E2, eta1, eta2 = params
    d = derive(BurgersParameters(*params))
    assert d.A**2 == pytest.approx(d.p1**2 - 4 * d.p2, rel=1e-12)
    assert 0 < d.r1 < d.r2
    assert d.r1 + d.r2 == pytest.approx(d.p1 / d.p2, rel=1e-12)
    assert d.r1 * d.r2 * d.p2 == pytest.approx(1.0, rel=1e-12)
    assert d.b1 > 0 and d.b2 > 0
    assert abs(d.b1 / d.r1 + d.b2 / d.r2 - 1) <= 1e-12
    assert d.c2 == pytest.approx(d.q2 / d.p2, rel=1e-15)
    assert d.c2 == pytest.approx(E1, rel=1e-12)
    assert abs(d.accumulation + E2 / eta2) <= 1e-12 * (E2 / eta2)
    assert d.accumulation == pytest.approx(-d.q1 / d.q2, rel=1e-12)
    assert d.prony_model().normalized


@pytest.mark.parametrize("bad", [(0, 1, 1, 1), (1, -1, 1, 1), (1, 1, float("inf"), 1), (1, 1, 1, 0)])
def test_parameters_validated(bad):
    with pytest.raises(ValueError):
        BurgersParameters(*bad)


def test_derived_json_round_trip():
    data = json.loads(UNIT.to_json())
    assert data["accumulation"] == pytest.approx(-1.0)
    assert {"p1", "p2", "q1", "q2", "A", "r1", "r2", "b1", "b2", "c2", "alpha"} <= set(data)
    assert BurgersDerived.from_dict(data) == UNIT


# modal roots ---------------------------------------------------------------------------


def test_unit_roots_lambda_100():
    roots = mode_roots(UNIT, 100.0)
    a, b, c = cubic_coefficients(UNIT, 100.0)
    assert (a, b, c) == pytest.approx((3.0, 101.0, 100.0))
    oracle = newton_real_root((c, b, a), -1.0)
    assert roots.rho == pytest.approx(oracle, abs=1e-12)
    assert roots.rho == pytest.approx(-1.0102, abs=1e-4)
    assert roots.omega.real > 0 and roots.omega.imag > 0


@given(burgers_params, st.floats(1.0, 1e9))
def test_roots_vieta_and_residual(params, lam):
    d = derive(BurgersParameters(*params))
    roots = mode_roots(d, lam)
    a, b, c = cubic_coefficients(d, lam)
    assert c > 0  # no zero root of the cubic
    assert sum(roots.roots).real == pytest.approx(-a, rel=1e-9, abs=1e-9 * math.sqrt(lam))
    for z in roots.roots:
        terms = np.array([z**3, a * z**2, b * z, c])
        assert abs(terms.sum()) <= 1e-10 * np.abs(terms).sum()
    assert roots.rho < 0
    if not roots.degenerate:
        assert roots.omega.real > 0 and roots.omega.imag > 0
        quad_roots = (0.0, roots.rho, 1j * roots.omega, -1j * np.conj(roots.omega))
        assert np.max(quartic_residuals(d, lam, quad_roots)) <= 1e-9


def test_degenerate_regime_flagged():
    # Small lambda can give three real roots of the cubic; find one.
    lams = np.geomspace(1e-4, 10, 400)
    flags = [mode_roots(UNIT, lam).degenerate for lam in lams]
    assert any(flags) and not all(flags)
    lam = lams[flags.index(True)]
    r = mode_roots(UNIT, lam)
    assert r.omega is None and len(r.roots) == 3
    assert all(isinstance(z, float) for z in r.roots)
    with pytest.raises(DegenerateRootsError) as exc:
        solve_mode(UNIT, lam, 1.0, 0.0)
    assert exc.value.lam == lam


def test_mode_roots_rejects_lambda():
    with pytest.raises(ValueError):
        mode_roots(UNIT, 0.0)


@given(burgers_params, st.floats(1.0, 1e6))
def test_consistency_with_spectrum(params, lam):
    d = derive(BurgersParameters(*params))
    roots = mode_roots(d, lam)
    assume(not roots.degenerate)
    z = eigenvalues(d.prony_model(), lam).eigenvalues
    expected = [0.0, roots.rho, 1j * roots.omega, -1j * np.conj(roots.omega)]
    for e in expected:
        assert np.min(np.abs(z - e)) <= 1e-8 * max(1.0, abs(e))


# asymptotic expansions ----------------------------------------------------------------


def test_asymptotic_unit_lambda_100():
    rho_a, _ = asymptotic_roots(UNIT, 100.0)
    assert rho_a == pytest.approx(-1.01, abs=1e-12)
    assert abs(rho_a - mode_roots(UNIT, 100.0).rho) <= 10 / 100.0**2


def test_asymptotic_leading_terms():
    d = derive(BurgersParameters(2.0, 0.7, 3.0, 1.3))
    B = d.b1 + d.b2
    lam = 1e12
    rho_a, om_a = asymptotic_roots(d, lam)
    assert rho_a == pytest.approx(d.accumulation, rel=1e-10)
    assert om_a.imag == pytest.approx(B / 2, rel=1e-10)
    assert om_a.real / math.sqrt(lam) == pytest.approx(1.0, rel=1e-10)


def _slope(lams, errs):
    return np.polyfit(np.log(lams), np.log(errs), 1)[0]


@pytest.mark.parametrize("params", [(1, 1, 1, 1), (2.0, 0.7, 3.0, 1.3), (0.5, 4.0, 0.2, 6.0)])
def test_asymptotic_orders(params):
    d = derive(BurgersParameters(*params))
    lams = np.array([1e2, 1e3, 1e4, 1e5, 1e6])
    err_rho, err_om = [], []
    for lam in lams:
        exact = mode_roots(d, lam)
        rho_a, om_a = asymptotic_roots(d, lam)
        err_rho.append(abs(exact.rho - rho_a))
        err_om.append(abs(exact.omega - om_a))
    assert abs(_slope(lams, err_rho) + 2) <= 0.3
    assert abs(_slope(lams, err_om) + 1.5) <= 0.3


def coefficient_asymptotics(k, lam, u0, u1):
    B = k.b1 + k.b2
    acc = B - k.r1 - k.r2
    R1 = k.r1 * k.r2 * u1 / (-acc * lam)
    R2 = (B - k.r1) * (B - k.r2) * (u0 * acc + u1) / (acc * lam)
    C = (u0 / 2 - 0.25j * (B * u0 + 2 * u1) / math.sqrt(lam)
         - ((B - k.r1) * (B - k.r2) * u0 + B * u1) / (2 * lam))
    return R1, R2, C


@pytest.mark.parametrize("u0, u1", [(1.0, 0.0), (0.0, 1.0), (0.7, -1.3)])
def test_coefficient_asymptotics(u0, u1):
    d = derive(BurgersParameters(2.0, 0.7, 3.0, 1.3))
    scaled = []
    for lam in (1e4, 1e6):
        sol = solve_mode(d, lam, u0, u1)
        R1, R2, C = coefficient_asymptotics(d, lam, u0, u1)
        amp = abs(u0) + abs(u1)
        scaled.append((abs(sol.R1 - R1) * lam**2 / amp,
                       abs(sol.R2 - R2) * lam**2 / amp,
                       abs(sol.C - C) * lam**1.5 / amp))
    # remainders O(1/lam^2), O(1/lam^2), O(1/lam^1.5): scaled errors stay bounded
    assert max(max(row) for row in scaled) <= 10
    for lo, hi in list(zip(*scaled))[1:]:
        assert hi <= 2 * lo
    assert abs(solve_mode(d, 1e6, u0, u1).C - u0 / 2) <= 1e-2


def test_single_kernel_reduction():
    k = KernelPair(0.5, 1.0)
    b1, r1 = k.b1, k.r1
    for lam in (1e3, 1e6):
        exact = mode_roots(k, lam)
        rho_s = b1 - r1 - b1 * (b1 - r1) ** 2 / lam
        om_s = complex(math.sqrt(lam) + b1 / 2 * (0.75 * b1 - r1) / math.sqrt(lam),
                       b1 / 2 - b1 * (b1 - r1) ** 2 / (2 * lam))
        rho_a, om_a = asymptotic_roots(k, lam)
        assert rho_a == pytest.approx(rho_s, rel=1e-14)
        assert om_a == pytest.approx(om_s, rel=1e-14)
        assert abs(exact.rho - rho_s) <= 10 / lam**2
        assert abs(exact.omega - om_s) <= 10 / lam**1.5
        for u0, u1 in ((1.0, 0.0), (0.3, 0.8)):
            sol = solve_mode(k, lam, u0, u1)
            amp = abs(u0) + abs(u1)
            R2_s = b1 / lam * (u0 * (b1 - r1) + u1)
            C_s = (u0 / 2 - 0.25j * (b1 * u0 + 2 * u1) / math.sqrt(lam)
                   - b1 / 2 * ((b1 - r1) * u0 + u1) / lam)
            assert abs(sol.R1) <= 1e-12 * amp
            assert abs(sol.R2 - R2_s) <= 10 * amp / lam**2
            assert abs(sol.C - C_s) <= 10 * amp / lam**1.5
            gen = coefficient_asymptotics(k, lam, u0, u1)
            assert gen[1] == pytest.approx(R2_s, rel=1e-12)
            assert gen[2] == pytest.approx(C_s, rel=1e-12)


def test_R1_formula_is_exact():
    d = derive(BurgersParameters(2.0, 0.7, 3.0, 1.3))
    for lam in (3.0, 50.0, 1e4):
        sol = solve_mode(d, lam, 0.4, 1.1)
        R1 = coefficient_asymptotics(d, lam, 0.4, 1.1)[0]
        assert sol.R1 == pytest.approx(R1, rel=1e-9)


# closed-form solution ------------------------------------------------------------------


def test_zero_data():
    sol = solve_mode(UNIT, 100.0, 0.0, 0.0)
    assert (sol.R1, sol.R2, sol.C) == (0.0, 0.0, 0.0)
    assert np.all(eval_mode(sol, np.linspace(0, 10, 11)) == 0)


@given(burgers_params, st.floats(1.0, 1e6), st.floats(-2, 2), st.floats(-2, 2))
def test_initial_derivatives(params, lam, u0, u1):
    d = derive(BurgersParameters(*params))
    sol = solve_nondegenerate(d, lam, u0, u1)
    B = d.b1 + d.b2
    expected = [u0, u1, -lam * u0, lam * B * u0 - lam * u1]
    for k, e in enumerate(expected):
        # relative to the magnitude of the summed terms at t = 0
        size = (abs(sol.R1) * (k == 0) + abs(sol.R2 * sol.rho**k)
                + 2 * abs(sol.C * sol.omega**k))
        assert abs(sol.derivative(0.0, k) - e) <= 1e-8 * max(size, abs(e))


def test_long_time_limit():
    sol = solve_mode(UNIT, 30.0, 1.0, 0.5)
    assert abs(eval_mode(sol, 200.0) - sol.R1) <= 1e-10


def test_eval_mode_rejects_negative_time():
    with pytest.raises(ValueError):
        eval_mode(solve_mode(UNIT, 30.0, 1.0, 0.5), -1.0)


@given(burgers_params, st.floats(10.0, 100.0), st.floats(-2, 2), st.floats(-2, 2))
def test_fourth_order_ode_finite_differences(params, lam, u0, u1):
    assume(abs(u0) + abs(u1) > 1e-3)
    d = derive(BurgersParameters(*params))
    sol = solve_nondegenerate(d, lam, u0, u1)
    a, b, c = cubic_coefficients(d, lam)
    h = 1e-3
    for t in (0.3, 1.7, 4.0):
        u = eval_mode(sol, t + h * np.arange(-2, 3))
        d1 = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
        d2 = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h**2)
        d3 = (-u[0] + 2 * u[1] - 2 * u[3] + u[4]) / (2 * h**3)
        d4 = (u[0] - 4 * u[1] + 6 * u[2] - 4 * u[3] + u[4]) / h**4
        terms = np.array([d4, a * d3, b * d2, c * d1])
        # plus the rounding error of the 4th-difference stencil (weights sum to 16)
        # applied to values whose summands have magnitude |R1| + |R2| + 2|C|
        size = abs(sol.R1) + abs(sol.R2) + 2 * abs(sol.C)
        rounding = 16 * np.finfo(float).eps * size / h**4
        assert abs(terms.sum()) <= 1e-4 * np.abs(terms).sum() + rounding


def test_integro_differential_residual():
    rng = np.random.default_rng(11)
    d = derive(BurgersParameters(2.0, 0.7, 3.0, 1.3))
    lam = 10.0
    sol = solve_mode(d, lam, 0.8, -0.4)

    def kernel(s):
        return d.b1 * math.exp(-d.r1 * s) + d.b2 * math.exp(-d.r2 * s)

    for t in rng.uniform(0, 10, 20):
        conv, _ = quad(lambda s: kernel(t - s) * sol(s), 0, t, epsabs=1e-13, epsrel=1e-13,
                       limit=400)
        resid = sol.derivative(t, 2) + lam * sol(t) - lam * conv
        assert abs(resid) <= 1e-6


def test_mode_coefficients_reject_collisions():
    with pytest.raises(DegenerateRootsError):
        mode_coefficients(UNIT, 1.0, -1.0, None, 1.0, 0.0)
    with pytest.raises(DegenerateRootsError):
        mode_coefficients(UNIT, 1.0, 0.0, 2.0 + 0.5j, 1.0, 0.0)


def test_mode_table(tmp_path):
    rows = mode_table(UNIT, [10.0, 100.0])
    assert len(rows) == 2 and len(rows[0]) == len(MODE_TABLE_COLUMNS)
    path = tmp_path / "modes.csv"
    write_mode_table(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(MODE_TABLE_COLUMNS)
    assert lines[2].startswith("100.0,-1.01020407079,-1.01,")
