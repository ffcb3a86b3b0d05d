import numpy as np
import pytest

from conftest import standard_error
from epohedge import InstrumentSpec, epo_wealth, instrument_wealth, zcb_price
from epohedge.instruments import swap_wealth


def _par_rate():
    d = np.exp(-0.03 * np.arange(1, 11))
    return (1.0 - np.exp(-0.3)) / d.sum()


def test_par_swap_has_zero_value(small_paths):
    spec = InstrumentSpec.swap("receiver_swap", _par_rate(), 0.0, 10.0)
    w = instrument_wealth(spec, small_paths)
    np.testing.assert_allclose(w.value[:, 0], 0.0, atol=1e-13)


def test_three_percent_swap_is_slightly_in_the_money(small_paths, hw):
    # a 3% continuously compounded curve has a par rate just above 3%, so a 3% receiver is worth less than zero
    spec = InstrumentSpec.swap("receiver_swap", 0.03, 0.0, 10.0)
    v0 = instrument_wealth(spec, small_paths).value[0, 0]
    annuity = zcb_price(0.0, np.arange(1.0, 11.0), hw.r0, hw).sum()
    assert v0 == pytest.approx((0.03 - _par_rate()) * annuity, abs=1e-13)
    assert v0 < 0.0


def test_payer_is_negated_receiver(small_paths):
    rec = instrument_wealth(InstrumentSpec.swap("receiver_swap", 0.03, 0.0, 10.0), small_paths)
    pay = instrument_wealth(InstrumentSpec.swap("payer_swap", 0.03, 0.0, 10.0), small_paths)
    np.testing.assert_array_equal(rec.wealth, -pay.wealth)


def test_expired_swap_holds_only_cash(small_paths):
    w = instrument_wealth(InstrumentSpec.swap("receiver_swap", 0.03, 0.0, 5.0), small_paths)
    k5 = small_paths.grid.index(5.0)
    assert np.all(w.value[:, k5:] == 0.0)
    ratio = w.cash[:, -1] / w.cash[:, k5]
    growth = small_paths.money_account[:, -1] / small_paths.money_account[:, k5]
    np.testing.assert_allclose(ratio, growth, rtol=1e-10)


def test_physical_swaption_cash_arrives_at_payment(small_paths):
    # after the last deposit the account only accrues at the short rate
    w = instrument_wealth(InstrumentSpec.swaption("receiver_swaption", 0.03, 9.0, 10.0), small_paths)
    k10 = small_paths.grid.index(10.0)
    mask = w.cash[:, k10] != 0.0
    assert mask.any()
    np.testing.assert_array_equal(w.cash[:, :k10], 0.0)


@pytest.mark.parametrize("make", [
    lambda: InstrumentSpec.swap("receiver_swap", 0.03, 0.0, 10.0),
    lambda: InstrumentSpec.swaption("receiver_swaption", 0.03, 9.0, 10.0),
    lambda: InstrumentSpec.swaption("payer_swaption", 0.03, 9.0, 10.0),
    lambda: InstrumentSpec.swaption("payer_swaption", 0.03, 9.0, 10.0, settlement="cash"),
])
def test_discounted_wealth_is_martingale(small_paths, make):
    w = instrument_wealth(make(), small_paths)
    for t in (3.0, 9.0, 9.5, 10.0):
        k = small_paths.grid.index(t)
        disc = w.wealth[:, k] / small_paths.money_account[:, k]
        assert abs(disc.mean() - w.wealth[0, 0]) < 3.0 * standard_error(disc) + 1e-12


def test_swaption_parity_pathwise(small_paths):
    rec = instrument_wealth(InstrumentSpec.swaption("receiver_swaption", 0.03, 9.0, 10.0), small_paths)
    pay = instrument_wealth(InstrumentSpec.swaption("payer_swaption", 0.03, 9.0, 10.0), small_paths)
    swap = instrument_wealth(InstrumentSpec.swap("receiver_swap", 0.03, 9.0, 10.0), small_paths)
    np.testing.assert_allclose(rec.wealth - pay.wealth, swap.wealth, atol=1e-9)


def test_cash_settled_swaption_pays_at_expiry(small_paths):
    w = instrument_wealth(InstrumentSpec.swaption("receiver_swaption", 0.03, 9.0, 10.0, settlement="cash"),
                          small_paths)
    k9 = small_paths.grid.index(9.0)
    assert np.all(w.value[:, k9:] == 0.0)
    assert np.all(w.cash[:, k9] >= 0.0)


def test_notional_scaling(small_paths):
    one = instrument_wealth(InstrumentSpec.swaption("payer_swaption", 0.03, 9.0, 10.0), small_paths)
    two = instrument_wealth(InstrumentSpec.swaption("payer_swaption", 0.03, 9.0, 10.0, notional=2.0),
                            small_paths)
    np.testing.assert_allclose(two.wealth, 2.0 * one.wealth, rtol=1e-14)
    np.testing.assert_allclose(one.scaled(3.0).wealth, 3.0 * one.wealth, rtol=1e-14)


def test_swap_notional_profile(small_paths):
    spec = InstrumentSpec.swap("receiver_swap", 0.03, 0.0, 10.0)
    full = swap_wealth(spec, small_paths)
    zero = swap_wealth(spec, small_paths, np.zeros(10))
    assert not np.any(zero.wealth)
    with pytest.raises(ValueError):
        swap_wealth(spec, small_paths, np.ones(3))
    assert full.wealth.shape == small_paths.r.shape


def test_epo_wealth_single_cashflow(small_paths):
    values = np.zeros_like(small_paths.r)
    cfs = np.zeros((small_paths.n_paths, 10))
    cfs[:, 3] = 7.0
    w = epo_wealth(values, cfs, small_paths, tuple(float(j) for j in range(1, 11)))
    k4 = small_paths.grid.index(4.0)
    assert np.all(w.cash[:, :k4] == 0.0)
    np.testing.assert_allclose(w.cash[:, k4:], 7.0 * small_paths.money_account[:, k4:]
                               / small_paths.money_account[:, k4:k4 + 1], rtol=1e-14)


def test_spec_validation():
    with pytest.raises(ValueError):
        InstrumentSpec("cap", 0.03, (0.0,), (1.0,))
    with pytest.raises(ValueError):
        InstrumentSpec.swaption("receiver_swaption", 0.03, 9.0, 10.0, settlement="other")
    with pytest.raises(ValueError):
        InstrumentSpec("receiver_swaption", 0.03, (9.0,), (10.0,), maturity=8.0)
    with pytest.raises(ValueError):
        InstrumentSpec("receiver_swap", 0.03, (0.0, 0.5), (1.0, 2.0))
