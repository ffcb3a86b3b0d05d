import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import standard_error
from epohedge import (MarketPriceOfRisk, OUParams, fit_theta, girsanov_map, make_grid,
                      market_price_of_risk, simulate_paths, trapezoid, with_behaviour, zcb_price)
from epohedge.paths import _block_normals


def test_girsanov_zero_price_of_risk_is_identity(ou_p):
    q = girsanov_map(ou_p, MarketPriceOfRisk(0.0, 0.0))
    assert (q.alpha_b, q.theta_b, q.eta_b, q.b0) == (ou_p.alpha_b, ou_p.theta_b, ou_p.eta_b, ou_p.b0)
    assert q.measure == "risk-neutral"


def test_girsanov_examples(ou_p):
    q = girsanov_map(ou_p, MarketPriceOfRisk(0.0, 1.0))
    assert q.alpha_b == pytest.approx(2.114, abs=1e-12)
    assert q.theta_b == pytest.approx(2.099 * -0.002 / 2.114, abs=1e-15)
    assert q.theta_b == pytest.approx(-0.0019858, abs=5e-8)
    q = girsanov_map(ou_p, MarketPriceOfRisk(0.1, 0.0))
    assert q.theta_b == pytest.approx(-0.002 - 0.0015 / 2.099, abs=1e-15)
    assert q.theta_b == pytest.approx(-0.0027146, abs=5e-8)


def test_girsanov_rejects_inadmissible(ou_p):
    with pytest.raises(ValueError):
        girsanov_map(ou_p, MarketPriceOfRisk(0.0, -2.099 / 0.015))


@settings(max_examples=100, deadline=None)
@given(lam0=st.floats(-50, 50), lam1=st.floats(-130, 500))
def test_girsanov_roundtrip(ou_p, lam0, lam1):
    q = girsanov_map(ou_p, MarketPriceOfRisk(lam0, lam1))
    back = market_price_of_risk(ou_p, q.alpha_b, q.theta_b)
    assert back.lambda1 == pytest.approx(lam1, abs=1e-12 * max(1.0, abs(lam1)))
    assert back.lambda0 == pytest.approx(lam0, abs=1e-10 * max(1.0, abs(lam0), abs(lam1)))


def test_grid_contains_dates_exactly(bullet, grid):
    for d in bullet.payment_dates:
        assert d in grid.times
    assert np.all(np.diff(grid.times) > 1e-12)
    assert len(grid) == 121


def test_zero_noise_paths_follow_means(curve):
    hw = fit_theta(curve, 0.1, 0.0)
    ou = OUParams(1.5, 0.01, 0.0, b0=-0.02)
    grid = make_grid(0.0, 3.0, 12)
    paths = simulate_paths(hw, ou, 0.3, grid, 5, 1)
    np.testing.assert_allclose(paths.b, np.broadcast_to(ou.mean(grid.times), paths.b.shape), atol=1e-15)
    np.testing.assert_allclose(paths.r, 0.03, atol=1e-14)


def test_behaviour_moments_at_one_year(hw, ou_p, grid):
    paths = simulate_paths(hw, ou_p, 0.44, grid, 100000, 21)
    b1 = paths.b[:, grid.index(1.0)]
    mean, var = ou_p.mean(1.0), ou_p.variance(1.0)
    assert abs(b1.mean() - mean) < 3.0 * np.sqrt(var / b1.size)
    # standard error of the sample variance of a Gaussian sample
    assert abs(b1.var(ddof=1) - var) < 3.0 * var * np.sqrt(2.0 / (b1.size - 1))


def test_shock_correlation(hw, ou_p, grid):
    paths = simulate_paths(hw, ou_p, 0.44, grid, 100000, 22)
    h = grid.times[1] - grid.times[0]
    # one-step residuals of the exact transitions are the correlated Gaussian shocks
    b_res = paths.b[:, 1] - ou_p.mean(h)
    r_res = paths.r[:, 1] - paths.r[:, 1].mean()
    corr = np.corrcoef(b_res, r_res)[0, 1]
    assert abs(corr - 0.44) < 0.02


def test_determinism_and_workers(hw, ou_p, grid):
    a = simulate_paths(hw, ou_p, 0.44, grid, 9000, 5, workers=1)
    b = simulate_paths(hw, ou_p, 0.44, grid, 9000, 5, workers=3)
    c = simulate_paths(hw, ou_p, 0.44, grid, 9000, 5)
    for x in (b, c):
        assert np.array_equal(a.r, x.r) and np.array_equal(a.b, x.b)
        assert np.array_equal(a.money_account, x.money_account)


def test_paths_stable_under_path_count(hw, ou_p, grid):
    a = simulate_paths(hw, ou_p, 0.44, grid, 5000, 5)
    b = simulate_paths(hw, ou_p, 0.44, grid, 9000, 5)
    assert np.array_equal(a.r, b.r[:5000]) and np.array_equal(a.b, b.b[:5000])


def test_block_streams_are_distinct():
    assert not np.array_equal(_block_normals(1, 0, 3), _block_normals(1, 1, 3))
    assert np.array_equal(_block_normals(1, 0, 3), _block_normals(1, 0, 3))


def test_with_behaviour_matches_fresh_simulation(hw, ou_p, grid):
    q = girsanov_map(ou_p, MarketPriceOfRisk(0.5, 20.0))
    base = simulate_paths(hw, ou_p, 0.44, grid, 3000, 8)
    fresh = simulate_paths(hw, q, 0.44, grid, 3000, 8)
    reused = with_behaviour(base, q)
    assert np.array_equal(reused.b, fresh.b)
    assert reused.r is base.r


@pytest.mark.parametrize("maturity", [1.0, 5.0, 10.0])
def test_money_account_martingale(hw, ou_p, grid, maturity):
    paths = simulate_paths(hw, ou_p, 0.44, grid, 50000, 9)
    disc = 1.0 / paths.money_account[:, grid.index(maturity)]
    assert abs(disc.mean() - zcb_price(0.0, maturity, hw.r0, hw)) < 3.0 * standard_error(disc)


def test_invalid_correlation(hw, ou_p, grid):
    with pytest.raises(ValueError):
        simulate_paths(hw, ou_p, 1.5, grid, 10, 1)


def test_trapezoid_constant_and_linear():
    t = np.linspace(0.0, 2.0, 9)
    assert trapezoid(np.full(9, 3.0), t, 0.0, 1.0) == pytest.approx(3.0, abs=1e-15)
    assert trapezoid(2.0 * t + 1.0, t, 0.5, 2.0) == pytest.approx((4.0 + 2.0) - (0.25 + 0.5), abs=1e-14)


def test_trapezoid_rejects_off_grid():
    t = np.linspace(0.0, 1.0, 5)
    with pytest.raises(ValueError):
        trapezoid(t, t, 0.1, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_trapezoid_matches_refined_interpolant(values):
    t = np.array([0.0, 0.3, 0.5, 1.2, 1.7, 2.0])
    v = np.array(values)
    fine = np.linspace(0.0, 2.0, 200001)
    f = np.interp(fine, t, v)
    refined = float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(fine)))
    assert trapezoid(v, t, 0.0, 2.0) == pytest.approx(refined, abs=1e-9)
