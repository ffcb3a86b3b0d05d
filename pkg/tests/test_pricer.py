import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import standard_error
from epohedge import (LsmConfig, OUParams, RegressionBasis, SigmoidParams, notional_paths, price_epo,
                      price_epo_at_zero, simulate_paths, zcb_price)
from epohedge.pricer import discounted_cashflows, regress


def _states(n, seed):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.normal(0.03, 0.01, n), rng.normal(0.0, 0.005, n), rng.uniform(0, 500, n)])


def test_basis_size():
    assert RegressionBasis(2).n_functions() == 10
    assert RegressionBasis(3).n_functions() == 20
    assert RegressionBasis(2).design(_states(50, 0)).shape == (50, 10)


def test_regression_constant_target():
    beta = regress(_states(400, 1), np.full(400, 2.5))
    assert beta[0] == pytest.approx(2.5, abs=1e-9)
    np.testing.assert_allclose(beta[1:], 0.0, atol=1e-9)


def test_regression_reproduces_target_in_span():
    x = _states(500, 2)
    basis = RegressionBasis(2)
    design = basis.design(x)
    coef = np.arange(1.0, 11.0)
    beta = regress(x, design @ coef, basis, ridge=0.0)
    np.testing.assert_allclose(beta, coef, rtol=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_regression_matches_lstsq(seed):
    x = _states(300, seed)
    y = np.sin(40 * x[:, 0]) + x[:, 1] * x[:, 2] + np.random.default_rng(seed + 1).normal(size=300)
    basis = RegressionBasis(2)
    design = basis.design(x)
    # independent route: orthogonal factorization of the design itself
    q, r = np.linalg.qr(design)
    expected = np.linalg.solve(r, q.T @ y)
    np.testing.assert_allclose(regress(x, y, basis, ridge=0.0), expected, rtol=1e-7, atol=1e-9)


def test_regression_ridge_zero_rank_deficient():
    x = _states(5, 3)
    with pytest.raises(np.linalg.LinAlgError):
        regress(x, np.ones(5), RegressionBasis(2), ridge=0.0)


def test_lsm_config_validation():
    with pytest.raises(ValueError):
        LsmConfig(ridge=-1.0)
    with pytest.raises(ValueError):
        RegressionBasis(degree=-1)


def test_zero_prepayment_has_zero_value(bullet, small_paths):
    n = notional_paths(bullet, SigmoidParams(0.0, 0.0), small_paths)
    v = price_epo(small_paths, n, bullet)
    assert np.all(np.abs(v) < 1e-9)


def test_value_vanishes_from_final_payment(bullet, small_paths, small_notionals):
    v = price_epo(small_paths, small_notionals, bullet)
    k = small_paths.grid.index(10.0)
    assert np.all(v[:, k:] == 0.0)
    assert v.shape == small_paths.r.shape


def test_constant_value_at_issue(bullet, small_paths, small_notionals):
    v = price_epo(small_paths, small_notionals, bullet)
    assert np.ptp(v[:, 0]) < 1e-9 * max(1.0, abs(v[0, 0]))


def test_deterministic_notional_oracle(hw, bullet, grid):
    # a constant rate beta gives N_p(t) = beta * N0 * t, so each period integral is beta * N0 * (j - 1/2)
    beta = 0.05
    paths = simulate_paths(hw, OUParams(1.0, 0.0, 0.0), 0.0, grid, 20000, 4)
    n = notional_paths(bullet, SigmoidParams(beta, beta), paths)
    j = np.arange(1, 11, dtype=float)
    p = zcb_price(0.0, np.concatenate([[0.0], j]), hw.r0, hw)
    oracle = float(np.sum(beta * 1e4 * (j - 0.5) * (bullet.fixed_rate * p[1:] - (p[:-1] - p[1:]))))
    res = price_epo_at_zero(paths, n, bullet)
    pv = discounted_cashflows(paths, n, bullet).sum(axis=1)
    se = standard_error(pv)
    assert abs(res.direct - oracle) < 3.0 * se
    assert abs(res.value - oracle) < 3.0 * se


def test_tower_property(bullet, small_paths, small_notionals):
    # V(0) = E[discounted cash flows up to t_k + V(t_k) / M(t_k)] at payment dates
    v = price_epo(small_paths, small_notionals, bullet)
    dcf = discounted_cashflows(small_paths, small_notionals, bullet)
    for j in (2, 5, 8):
        k = small_paths.grid.index(float(j))
        total = dcf[:, :j].sum(axis=1) + v[:, k] / small_paths.money_account[:, k]
        assert abs(total.mean() - v[0, 0]) < 3.0 * standard_error(total)


def test_lsm_agrees_with_direct_average(bullet, small_paths, small_notionals):
    res = price_epo_at_zero(small_paths, small_notionals, bullet)
    assert abs(res.value - res.direct) < 2.0 * res.stderr
    assert res.bps == pytest.approx(1e4 * res.value / 1e4)


def test_degree_three_is_stable(bullet, small_paths, small_notionals):
    v2 = price_epo_at_zero(small_paths, small_notionals, bullet).value
    v3 = price_epo_at_zero(small_paths, small_notionals, bullet, LsmConfig(RegressionBasis(3))).value
    se = price_epo_at_zero(small_paths, small_notionals, bullet).stderr
    assert abs(v3 - v2) < se


def test_out_of_sample_valuation(hw, ou_p, grid, bullet, small_paths, small_notionals):
    other = simulate_paths(hw, ou_p, 0.44, grid, 4000, 12)
    n_other = notional_paths(bullet, SigmoidParams.empirical(), other)
    res = price_epo_at_zero(small_paths, small_notionals, bullet, fit_on=(other, n_other))
    assert abs(res.value - res.direct) < 3.0 * res.stderr


def test_empirical_sigmoid_cheaper_than_rational(hw, bullet, grid):
    paths = simulate_paths(hw, OUParams(2.099, 0.0, 0.0), 0.0, grid, 20000, 6)
    emp = price_epo_at_zero(paths, notional_paths(bullet, SigmoidParams.empirical(), paths), bullet)
    rat = price_epo_at_zero(paths, notional_paths(bullet, SigmoidParams.rational_default(), paths), bullet)
    assert emp.value < rat.value
