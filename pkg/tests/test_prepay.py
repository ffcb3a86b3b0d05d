import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epohedge import (MortgageSpec, OUParams, SigmoidParams, contractual_notional, epo_cashflow,
                      epo_cashflows, forward_rate, make_grid, notional_paths, prepayment_rate,
                      simulate_paths, swap_rate_annuity, zcb_price)
from epohedge.prepay import incentive_swap_rate, sigmoid


def test_bullet_contractual_notional(bullet):
    assert contractual_notional(bullet, 9.99) == 10000.0
    assert contractual_notional(bullet, 10.0) == 0.0
    assert contractual_notional(bullet, 10.0, left=True) == 10000.0


def test_linear_contractual_notional():
    three = MortgageSpec(1.0, 0.03, (1.0, 2.0, 3.0), "linear")
    assert contractual_notional(three, 1.0) == pytest.approx(2.0 / 3.0)
    ten = MortgageSpec.annual(amortization="linear")
    assert contractual_notional(ten, 5.5) == pytest.approx(5000.0)


def test_contractual_notional_before_issue(bullet):
    with pytest.raises(ValueError):
        contractual_notional(bullet, -0.5)


def test_single_period_swap_rate_is_forward(hw):
    spec = MortgageSpec(1.0, 0.03, (1.0, 2.0, 3.0))
    kappa, _ = swap_rate_annuity(2.0, 0.035, spec, hw)
    assert kappa == pytest.approx(forward_rate(2.0, 2.0, 3.0, 0.035, hw), rel=1e-13)


def test_flat_curve_par_rate(hw, bullet):
    kappa, annuity = swap_rate_annuity(0.0, hw.r0, bullet, hw)
    discounts = np.exp(-0.03 * np.arange(1, 11))
    assert kappa == pytest.approx((1.0 - np.exp(-0.3)) / discounts.sum(), rel=1e-12)
    assert annuity == pytest.approx(1e4 * discounts.sum(), rel=1e-12)


def test_amortizing_swap_rate_brute_force(hw):
    spec = MortgageSpec.annual(amortization="linear")
    r, t = 0.027, 0.0
    numer = denom = 0.0
    for j in range(1, 11):
        n_prev = 1e4 * (1.0 - (j - 1) / 10.0)
        p_prev, p_j = zcb_price(t, j - 1.0, r, hw), zcb_price(t, float(j), r, hw)
        numer += n_prev * (p_prev - p_j)
        denom += n_prev * 1.0 * p_j
    kappa, annuity = swap_rate_annuity(t, r, spec, hw)
    assert kappa == pytest.approx(numer / denom, rel=1e-12)
    assert annuity == pytest.approx(denom, rel=1e-12)


def test_swap_rate_after_maturity_rejected(hw, bullet):
    with pytest.raises(ValueError):
        swap_rate_annuity(10.0, 0.03, bullet, hw)


def test_vectorized_incentive_matches_scalar(bullet, small_paths, hw):
    kappa = incentive_swap_rate(bullet, small_paths)
    for k in (0, 7, 12, 55, 119):
        t = small_paths.times[k]
        expected, _ = swap_rate_annuity(t, small_paths.r[:5, k], bullet, hw)
        np.testing.assert_allclose(kappa[:5, k], expected, rtol=1e-12)
    np.testing.assert_array_equal(kappa[:, -1], small_paths.r[:, -1])


def test_sigmoid_values():
    emp = SigmoidParams.empirical()
    assert sigmoid(0.0, emp) == pytest.approx((0.0231 + 0.0447) / 2.0)
    assert sigmoid(0.01, emp) == pytest.approx(0.0231 + 0.0108 * (np.tanh(0.84) + 1.0), rel=1e-14)
    assert sigmoid(0.01, emp) == pytest.approx(0.04131, abs=5e-6)
    rat = SigmoidParams.rational_default()
    assert sigmoid(0.01, rat) == 0.0447
    assert sigmoid(-0.01, rat) == 0.0
    assert sigmoid(0.0, rat) == pytest.approx(0.02235)


def test_sigmoid_param_validation():
    with pytest.raises(ValueError):
        SigmoidParams(0.05, 0.01)
    with pytest.raises(ValueError):
        SigmoidParams(0.0, 0.01, -1.0)


@settings(max_examples=60, deadline=None)
@given(b1=st.floats(-0.05, 0.05), b2=st.floats(-0.05, 0.05), r1=st.floats(0.0, 0.08), r2=st.floats(0.0, 0.08))
def test_prepayment_rate_monotone(hw, bullet, b1, b2, r1, r2):
    emp = SigmoidParams.empirical()
    lo_b, hi_b = sorted((b1, b2))
    lo_r, hi_r = sorted((r1, r2))
    assert prepayment_rate(1.0, lo_r, lo_b, bullet, emp, hw) <= prepayment_rate(1.0, lo_r, hi_b, bullet, emp, hw)
    # a higher short rate raises the swap rate and lowers the incentive
    assert prepayment_rate(1.0, hi_r, lo_b, bullet, emp, hw) <= prepayment_rate(1.0, lo_r, lo_b, bullet, emp, hw) + 1e-15
    rate = prepayment_rate(1.0, lo_r, lo_b, bullet, emp, hw)
    assert emp.l <= rate <= emp.u


def test_no_prepayment_notionals(bullet, small_paths):
    n = notional_paths(bullet, SigmoidParams(0.0, 0.0), small_paths)
    assert not np.any(n.prepayment)
    np.testing.assert_array_equal(n.realized, np.broadcast_to(n.contractual, n.realized.shape))


@pytest.mark.parametrize("mode", ["continuous", "reset"])
def test_notional_decomposition(bullet, small_paths, mode):
    n = notional_paths(bullet, SigmoidParams.empirical(), small_paths, mode)
    np.testing.assert_allclose(n.realized + n.prepayment, np.broadcast_to(n.contractual, n.realized.shape),
                               atol=1e-12)
    assert np.all(n.prepayment >= 0.0) and np.all(np.diff(n.prepayment[:, :-1], axis=1) >= -1e-12)


def test_example_half_prepayment_on_linear_schedule(hw):
    # a constant rate of 1/2 per year prepays half the notional by t1
    spec = MortgageSpec(1.0, 0.03, (1.0, 2.0, 3.0), "linear")
    grid = make_grid(0.0, 3.0, 12, spec.reset_dates, spec.payment_dates)
    paths = simulate_paths(hw, OUParams(1.0, 0.0, 0.01), 0.0, grid, 10, 1)
    n = notional_paths(spec, SigmoidParams(0.5, 0.5), paths)
    k1 = grid.index(1.0)
    np.testing.assert_allclose(n.realized[:, k1], 2.0 / 3.0 - 0.5, atol=1e-12)
    assert 2.0 / 3.0 - 0.5 == pytest.approx(1.0 / 6.0)


def test_saturated_prepayment_terminates(bullet, small_paths):
    n = notional_paths(bullet, SigmoidParams(5.0, 5.0), small_paths)
    k = small_paths.grid.index(0.5)
    assert np.all(n.realized[:, k:] == 0.0)
    np.testing.assert_array_equal(n.prepayment[:, k:], np.broadcast_to(n.contractual[k:], n.prepayment[:, k:].shape))


def test_rational_small_rate_never_exhausts_bullet(bullet, small_paths):
    # with u <= 1/n every lump prepayment is available in full: the cap never binds
    n = notional_paths(bullet, SigmoidParams(0.0, 0.1, rational=True), small_paths, "reset")
    reset_idx = small_paths.grid.indices(bullet.reset_dates)
    lumps = np.zeros_like(n.rate)
    lumps[:, reset_idx] = 1e4 * n.rate[:, reset_idx]
    k9 = small_paths.grid.index(9.0)
    np.testing.assert_allclose(n.prepayment[:, :k9 + 1], np.cumsum(lumps, axis=1)[:, :k9 + 1], atol=1e-9)
    assert np.all(n.realized[:, :k9] > 0.0)


def test_cashflow_zero_notional(bullet, small_paths):
    n = notional_paths(bullet, SigmoidParams(0.0, 0.0), small_paths)
    assert not np.any(epo_cashflow(small_paths, n, bullet, 3))


def test_cashflow_zero_spread(hw, small_paths, small_notionals, bullet):
    k2 = small_paths.grid.index(2.0)
    fixing = forward_rate(2.0, 2.0, 3.0, small_paths.r[0, k2], hw)
    spec = MortgageSpec(1e4, float(fixing), bullet.payment_dates)
    cf = epo_cashflow(small_paths, small_notionals, spec, 3)
    assert cf[0] == pytest.approx(0.0, abs=1e-12)


def test_cashflow_constant_notional(hw, bullet, small_paths):
    # a huge rate fills the prepayment notional to N0 at once; the period integral is then N0
    n = notional_paths(bullet, SigmoidParams(1e6, 1e6), small_paths)
    k4 = small_paths.grid.index(4.0)
    fix = forward_rate(4.0, 4.0, 5.0, small_paths.r[:, k4], hw)
    np.testing.assert_allclose(epo_cashflow(small_paths, n, bullet, 5), (bullet.fixed_rate - fix) * 1e4,
                               rtol=1e-12, atol=1e-9)


def test_cashflow_matrix_matches_single(small_paths, small_notionals, bullet):
    cfs = epo_cashflows(small_paths, small_notionals, bullet)
    for j in (1, 4, 10):
        np.testing.assert_allclose(cfs[:, j - 1], epo_cashflow(small_paths, small_notionals, bullet, j),
                                   rtol=1e-12, atol=1e-12)
    with pytest.raises(ValueError):
        epo_cashflow(small_paths, small_notionals, bullet, 11)


def test_grid_must_cover_mortgage(hw, bullet):
    grid = make_grid(0.0, 5.0, 12)
    paths = simulate_paths(hw, OUParams(1.0, 0.0, 0.01), 0.0, grid, 10, 1)
    with pytest.raises(ValueError):
        notional_paths(bullet, SigmoidParams.empirical(), paths)
