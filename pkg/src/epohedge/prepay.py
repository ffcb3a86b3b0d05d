"""Mortgage contract mechanics and the two-factor prepayment model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .market import HullWhiteParams, zcb_price
from .paths import PathSet

AMORTIZATIONS = ("bullet", "linear")
PREPAYMENT_MODES = ("continuous", "reset")


@dataclass(frozen=True)
class MortgageSpec:
    notional0: float
    fixed_rate: float
    payment_dates: tuple
    amortization: str = "bullet"
    issue: float = 0.0

    def __post_init__(self):
        dates = tuple(float(d) for d in self.payment_dates)
        object.__setattr__(self, "payment_dates", dates)
        if not self.notional0 > 0.0:
            raise ValueError("notional0 must be positive")
        if not dates:
            raise ValueError("at least one payment date is required")
        if dates[0] <= self.issue or np.any(np.diff(dates) <= 0.0):
            raise ValueError("payment dates must be strictly increasing and after issue")
        if self.amortization not in AMORTIZATIONS:
            raise ValueError(f"amortization must be one of {AMORTIZATIONS}, got {self.amortization!r}")

    @classmethod
    def annual(cls, notional0=1e4, fixed_rate=0.031, years=10, amortization="bullet"):
        return cls(notional0, fixed_rate, tuple(float(j) for j in range(1, years + 1)), amortization)

    @property
    def n(self) -> int:
        return len(self.payment_dates)

    @property
    def maturity(self) -> float:
        return self.payment_dates[-1]

    @property
    def reset_dates(self) -> tuple:
        return (self.issue,) + self.payment_dates[:-1]

    @property
    def accruals(self) -> np.ndarray:
        return np.diff((self.issue,) + self.payment_dates)

    @property
    def period_notionals(self) -> np.ndarray:
        """Contractual notional outstanding over each period, N_c(t_{j-1})."""
        return contractual_notional(self, np.asarray(self.reset_dates))


def contractual_notional(spec: MortgageSpec, t, left: bool = False):
    """Scheduled outstanding notional at ``t`` (right-continuous; ``left`` gives N_c(t-))."""
    t = np.asarray(t, dtype=float)
    if np.any(t < spec.issue - 1e-12):
        raise ValueError("contractual notional is undefined before issue")
    dates = np.asarray(spec.payment_dates)
    side = "left" if left else "right"
    paid = np.searchsorted(dates + 0.0, t, side=side)
    if spec.amortization == "bullet":
        out = np.where(paid < spec.n, spec.notional0, 0.0)
    else:
        out = spec.notional0 * (1.0 - paid / spec.n)
    return out if out.ndim else float(out)


def swap_rate_annuity(t: float, r_t, spec: MortgageSpec, params: HullWhiteParams):
    """Generalised swap rate and annuity of the remaining contractual schedule.

    A period already running at ``t`` enters as the stub (t, t_j]; at reset
    dates this is the plain amortizing par rate.
    """
    dates = np.asarray(spec.payment_dates)
    live = np.nonzero(dates > t + 1e-12)[0]
    if live.size == 0:
        raise ValueError(f"no payment dates after t={t}")
    starts = np.maximum(np.asarray(spec.reset_dates)[live], t)
    weights = spec.period_notionals[live]
    r_t = np.asarray(r_t, dtype=float)
    numer = np.zeros_like(r_t)
    annuity = np.zeros_like(r_t)
    for s, e, w in zip(starts, dates[live], weights):
        p_e = zcb_price(t, e, r_t, params)
        numer = numer + w * (zcb_price(t, s, r_t, params) - p_e)
        annuity = annuity + w * (e - s) * p_e
    return numer / annuity, annuity


def incentive_swap_rate(spec: MortgageSpec, paths: PathSet) -> np.ndarray:
    """Path-wise swap rate on every grid node; at and after maturity the short rate (stub limit)."""
    times = paths.times
    kappa = np.array(paths.r, copy=True)
    dates = np.asarray(spec.payment_dates)
    resets = np.asarray(spec.reset_dates)
    weights = spec.period_notionals
    hw = paths.hw
    for k, t in enumerate(times):
        live = np.nonzero(dates > t + 1e-12)[0]
        if live.size == 0:
            continue
        r_t = paths.r[:, k]
        b_of = hw.B(t, dates[live])
        log_a = hw.log_A(t, dates[live])
        disc = np.exp(log_a[None, :] - np.outer(r_t, b_of))
        starts = np.maximum(resets[live], t)
        p_start = np.exp(hw.log_A(t, starts)[None, :] - np.outer(r_t, hw.B(t, starts)))
        numer = (p_start - disc) @ weights[live]
        annuity = disc @ (weights[live] * (dates[live] - starts))
        kappa[:, k] = numer / annuity
    return kappa


@dataclass(frozen=True)
class SigmoidParams:
    """Rate-incentive response l + (u-l)/2 (tanh(a x) + 1); ``rational`` is the a -> inf step."""

    l: float
    u: float
    a: float = 0.0
    rational: bool = False

    def __post_init__(self):
        if not 0.0 <= self.l <= self.u:
            raise ValueError(f"need 0 <= l <= u, got l={self.l}, u={self.u}")
        if self.a < 0.0:
            raise ValueError("steepness a must be non-negative")

    @classmethod
    def empirical(cls):
        return cls(0.0231, 0.0447, 84.0)

    @classmethod
    def rational_default(cls):
        return cls(0.0, 0.0447, rational=True)


def sigmoid(x, params: SigmoidParams):
    x = np.asarray(x, dtype=float)
    if params.rational:
        step = np.where(x > 0.0, 1.0, np.where(x < 0.0, 0.0, 0.5))
        return params.l + (params.u - params.l) * step
    return params.l + 0.5 * (params.u - params.l) * (np.tanh(params.a * x) + 1.0)


def prepayment_rate(t: float, r_t, b_t, spec: MortgageSpec, sigmoid_params: SigmoidParams,
                    params: HullWhiteParams):
    """Instantaneous prepayment rate (fraction of N0 per year) for perceived incentive K - kappa + b."""
    kappa, _ = swap_rate_annuity(t, r_t, spec, params)
    return sigmoid(spec.fixed_rate - kappa + np.asarray(b_t, dtype=float), sigmoid_params)


@dataclass(frozen=True)
class NotionalPaths:
    """Contractual, prepayment and realized notionals on the path grid.

    ``prepayment_left`` holds left limits N(t-) at the nodes; it differs from
    ``prepayment`` only where the schedule or a lump prepayment jumps.
    """

    contractual: np.ndarray
    prepayment: np.ndarray
    prepayment_left: np.ndarray
    rate: np.ndarray

    @property
    def realized(self) -> np.ndarray:
        return self.contractual[None, :] - self.prepayment

    def step_integrals(self, times) -> np.ndarray:
        """Trapezoid of N over each grid step, using left limits at the right end; column 0 is 0."""
        out = np.zeros_like(self.prepayment)
        h = np.diff(times)
        out[:, 1:] = 0.5 * h * (self.prepayment[:, :-1] + self.prepayment_left[:, 1:])
        return out


def _check_coverage(spec: MortgageSpec, paths: PathSet):
    times = paths.times
    if abs(times[0] - spec.issue) > 1e-9 or times[-1] < spec.maturity - 1e-9:
        raise ValueError("path grid must start at issue and cover the mortgage horizon")
    paths.grid.indices(spec.payment_dates)


def notional_paths(spec: MortgageSpec, sigmoid_params: SigmoidParams, paths: PathSet,
                   mode: str = "continuous", kappa: np.ndarray = None) -> NotionalPaths:
    """Prepayment notional N = min(N_c, N0 * cumulative prepayment) along each path.

    ``mode="continuous"`` integrates the rate over the grid; ``mode="reset"``
    prepays lumps rate * period length at reset dates only.
    """
    if mode not in PREPAYMENT_MODES:
        raise ValueError(f"mode must be one of {PREPAYMENT_MODES}")
    _check_coverage(spec, paths)
    times = paths.times
    if kappa is None:
        kappa = incentive_swap_rate(spec, paths)
    rate = sigmoid(spec.fixed_rate - kappa + paths.b, sigmoid_params)
    nc = contractual_notional(spec, times)
    nc_left = contractual_notional(spec, times, left=True)
    if mode == "continuous":
        cum = spec.notional0 * cumulative_trapezoid(rate, times, axis=1, initial=0.0)
        cum_left = cum
    else:
        reset_idx = paths.grid.indices(spec.reset_dates)
        lumps = np.zeros_like(rate)
        lumps[:, reset_idx] = spec.notional0 * rate[:, reset_idx] * spec.accruals[None, :]
        cum = np.cumsum(lumps, axis=1)
        cum_left = cum - lumps
    prepaid = np.minimum(nc[None, :], cum)
    prepaid_left = np.minimum(nc_left[None, :], cum_left)
    return NotionalPaths(nc, prepaid, prepaid_left, rate)


def fixings(paths: PathSet, spec_dates_reset, spec_dates_pay) -> np.ndarray:
    """Simply-compounded fixings F(t_{j-1}; t_{j-1}, t_j) per path, one column per period."""
    grid = paths.grid
    out = np.empty((paths.n_paths, len(spec_dates_pay)))
    for j, (s, e) in enumerate(zip(spec_dates_reset, spec_dates_pay)):
        p = zcb_price(s, e, paths.r[:, grid.index(s)], paths.hw)
        out[:, j] = (1.0 / p - 1.0) / (e - s)
    return out


def period_integrals(paths: PathSet, notionals: NotionalPaths, spec: MortgageSpec) -> np.ndarray:
    steps = np.cumsum(notionals.step_integrals(paths.times), axis=1)
    idx = paths.grid.indices((spec.issue,) + spec.payment_dates)
    return np.diff(steps[:, idx], axis=1)


def epo_cashflows(paths: PathSet, notionals: NotionalPaths, spec: MortgageSpec) -> np.ndarray:
    """EPO cash flows (K - F) * integral of N over each period; columns are t_1..t_n."""
    fix = fixings(paths, spec.reset_dates, spec.payment_dates)
    return (spec.fixed_rate - fix) * period_integrals(paths, notionals, spec)


def epo_cashflow(paths: PathSet, notionals: NotionalPaths, spec: MortgageSpec, j: int) -> np.ndarray:
    """Cash flow paid at t_j (1-based) on every path."""
    if not 1 <= j <= spec.n:
        raise ValueError(f"payment index {j} out of range 1..{spec.n}")
    s, e = spec.reset_dates[j - 1], spec.payment_dates[j - 1]
    grid = paths.grid
    p = zcb_price(s, e, paths.r[:, grid.index(s)], paths.hw)
    fix = (1.0 / p - 1.0) / (e - s)
    steps = notionals.step_integrals(paths.times)
    integral = steps[:, grid.index(s) + 1: grid.index(e) + 1].sum(axis=1)
    return (spec.fixed_rate - fix) * integral
