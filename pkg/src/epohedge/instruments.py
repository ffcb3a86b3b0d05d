"""Path-wise value, cash account and wealth of the hedge instruments and of the EPO.

Every instrument's cash flows are deposited into a single money-market
account and accrue at the simulated short rate from their payment date on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import zcb_option_price, zcb_price
from .paths import PathSet

KINDS = ("receiver_swap", "payer_swap", "receiver_swaption", "payer_swaption")
SETTLEMENTS = ("physical", "cash")


@dataclass(frozen=True)
class InstrumentSpec:
    """Plain-vanilla fixed-for-floating swap or single-period European swaption.

    ``reset_dates``/``payment_dates`` describe the (underlying) swap; a
    swaption expires at ``maturity``, which must equal the first reset.
    """

    kind: str
    strike: float
    reset_dates: tuple
    payment_dates: tuple
    maturity: float = None
    notional: float = 1.0
    settlement: str = "physical"

    def __post_init__(self):
        resets = tuple(float(d) for d in self.reset_dates)
        pays = tuple(float(d) for d in self.payment_dates)
        object.__setattr__(self, "reset_dates", resets)
        object.__setattr__(self, "payment_dates", pays)
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not pays or len(resets) != len(pays):
            raise ValueError("schedule needs one reset per payment date")
        if any(e <= s for s, e in zip(resets, pays)) or any(
                n < e for e, n in zip(pays[:-1], resets[1:])):
            raise ValueError("schedule periods must be ordered and non-overlapping")
        if self.settlement not in SETTLEMENTS:
            raise ValueError(f"settlement must be one of {SETTLEMENTS}")
        if self.is_swaption:
            if self.maturity is None or abs(self.maturity - resets[0]) > 1e-12:
                raise ValueError("swaption maturity must equal the first reset of the underlying")
            if len(pays) != 1:
                raise ValueError("only single-period swaption underlyings are supported")

    @classmethod
    def swap(cls, kind, strike, start, end, tenor=1.0, notional=1.0):
        edges = np.round(np.arange(start, end + 1e-9, tenor), 12)
        return cls(kind, strike, tuple(edges[:-1]), tuple(edges[1:]), None, notional)

    @classmethod
    def swaption(cls, kind, strike, expiry, end, notional=1.0, settlement="physical"):
        return cls(kind, strike, (expiry,), (end,), expiry, notional, settlement)

    @property
    def is_swaption(self) -> bool:
        return self.kind.endswith("swaption")

    @property
    def sign(self) -> float:
        return 1.0 if self.kind.startswith("receiver") else -1.0

    @property
    def accruals(self) -> np.ndarray:
        return np.asarray(self.payment_dates) - np.asarray(self.reset_dates)


@dataclass(frozen=True)
class WealthPath:
    value: np.ndarray
    cash: np.ndarray

    def __post_init__(self):
        if self.value.shape != self.cash.shape:
            raise ValueError("value and cash must have the same shape")

    @property
    def wealth(self) -> np.ndarray:
        return self.value + self.cash

    def scaled(self, w: float) -> "WealthPath":
        return WealthPath(w * self.value, w * self.cash)


def accrue(deposits, paths: PathSet) -> np.ndarray:
    """Cash account fed by ``deposits`` = [(node index, per-path amount), ...]."""
    money = paths.money_account
    cash = np.zeros_like(money)
    for k, amount in deposits:
        cash[:, k:] += np.asarray(amount)[:, None] * (money[:, k:] / money[:, k:k + 1])
    return cash


def _fixing(paths: PathSet, s: float, e: float) -> np.ndarray:
    p = zcb_price(s, e, paths.r[:, paths.grid.index(s)], paths.hw)
    return (1.0 / p - 1.0) / (e - s)


def _period_value(t, r_t, s, e, strike, fixing, hw):
    """Unit-notional receiver value of the period (s, e] at t < e."""
    delta = e - s
    p_e = zcb_price(t, e, r_t, hw)
    if t < s:
        return strike * delta * p_e - (zcb_price(t, s, r_t, hw) - p_e)
    return delta * (strike - fixing) * p_e


def swap_wealth(spec: InstrumentSpec, paths: PathSet, notional_profile=None) -> WealthPath:
    """Value and cash account of a swap with per-period notionals ``notional_profile``.

    A period's coupon (K - F) N delta is paid into cash at its payment date; the
    fixing F is set from the simulated short rate at the reset.
    """
    if spec.is_swaption:
        raise ValueError("swap_wealth expects a swap")
    notionals = (np.full(len(spec.payment_dates), spec.notional) if notional_profile is None
                 else np.asarray(notional_profile, dtype=float))
    if notionals.shape != (len(spec.payment_dates),):
        raise ValueError("notional profile needs one entry per period")
    times = paths.times
    value = np.zeros_like(paths.r)
    deposits = []
    for s, e, w in zip(spec.reset_dates, spec.payment_dates, notionals):
        if w == 0.0:
            continue
        ke = paths.grid.index(e)
        fixing = _fixing(paths, s, e)
        for k in range(ke):
            value[:, k] += w * _period_value(times[k], paths.r[:, k], s, e, spec.strike, fixing, paths.hw)
        deposits.append((ke, w * (e - s) * (spec.strike - fixing)))
    value *= spec.sign
    cash = spec.sign * accrue(deposits, paths)
    return WealthPath(value, cash)


def swaption_wealth(spec: InstrumentSpec, paths: PathSet) -> WealthPath:
    """Single-period European swaption as a scaled option on the zero-coupon bond.

    The receiver pays off (1 + K delta) * (P(T_m; T_n) - 1/(1 + K delta))^+ at
    expiry.  Under physical settlement an in-the-money option turns into the
    underlying swap; under cash settlement its payoff goes to cash at expiry.
    """
    if not spec.is_swaption:
        raise ValueError("swaption_wealth expects a swaption")
    s, e = spec.reset_dates[0], spec.payment_dates[0]
    delta = e - s
    scale = 1.0 + spec.strike * delta
    kind = "call" if spec.sign > 0 else "put"
    grid, times, hw = paths.grid, paths.times, paths.hw
    ks, ke = grid.index(s), grid.index(e)
    value = np.zeros_like(paths.r)
    for k in range(ks):
        value[:, k] = scale * zcb_option_price(times[k], s, e, 1.0 / scale, kind, paths.r[:, k], hw)
    fixing = _fixing(paths, s, e)
    exercise = spec.sign * (spec.strike - fixing) > 0.0
    payoff = np.where(exercise, spec.sign * delta * (spec.strike - fixing) * zcb_price(s, e, paths.r[:, ks], hw), 0.0)
    if spec.settlement == "cash":
        deposits = [(ks, payoff)]
    else:
        value[:, ks] = payoff
        for k in range(ks + 1, ke):
            value[:, k] = np.where(exercise, spec.sign * _period_value(
                times[k], paths.r[:, k], s, e, spec.strike, fixing, hw), 0.0)
        deposits = [(ke, np.where(exercise, spec.sign * delta * (spec.strike - fixing), 0.0))]
    cash = accrue(deposits, paths)
    return WealthPath(spec.notional * value, spec.notional * cash)


def instrument_wealth(spec: InstrumentSpec, paths: PathSet) -> WealthPath:
    return swaption_wealth(spec, paths) if spec.is_swaption else swap_wealth(spec, paths)


def epo_wealth(epo_values, cashflows, paths: PathSet, payment_dates) -> WealthPath:
    """EPO wealth: ex-coupon value plus the accrued cash flows CF(t_j), one column per date."""
    epo_values = np.asarray(epo_values, dtype=float)
    cashflows = np.asarray(cashflows, dtype=float)
    if epo_values.shape != paths.r.shape:
        raise ValueError("EPO value matrix does not match the path set")
    if cashflows.shape != (paths.n_paths, len(payment_dates)):
        raise ValueError("cash flows need one column per payment date")
    idx = paths.grid.indices(payment_dates)
    cash = accrue(list(zip(idx, cashflows.T)), paths)
    return WealthPath(epo_values, cash)
