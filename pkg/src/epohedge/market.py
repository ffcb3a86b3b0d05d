"""Term structure and one-factor Hull-White closed forms.

Zero rates are continuously compounded and interpolated linearly in rate.
All times are year fractions on a continuous axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class YieldCurve:
    """Zero curve given by (tenor, zero rate) pillars.

    Flat extrapolation on both sides; one pillar means a flat curve.
    """

    tenors: tuple
    rates: tuple

    def __post_init__(self):
        tenors = np.asarray(self.tenors, dtype=float).ravel()
        rates = np.asarray(self.rates, dtype=float).ravel()
        if tenors.size == 0 or tenors.size != rates.size:
            raise ValueError("curve needs matching, non-empty tenors and rates")
        if np.any(tenors <= 0.0) or np.any(np.diff(tenors) <= 0.0):
            raise ValueError("curve tenors must be positive and strictly increasing")
        if not np.all(np.isfinite(rates)):
            raise ValueError("curve rates must be finite")
        object.__setattr__(self, "tenors", tuple(tenors.tolist()))
        object.__setattr__(self, "rates", tuple(rates.tolist()))

    @classmethod
    def flat(cls, rate: float) -> "YieldCurve":
        return cls((1.0,), (rate,))

    @classmethod
    def from_pairs(cls, pairs) -> "YieldCurve":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def zero_rate(self, t):
        return np.interp(t, self.tenors, self.rates)

    def _slope(self, t):
        # right derivative of the zero rate; zero outside the pillar range
        tn = np.asarray(self.tenors)
        rn = np.asarray(self.rates)
        t = np.asarray(t, dtype=float)
        if tn.size == 1:
            return np.zeros_like(t)
        slopes = np.diff(rn) / np.diff(tn)
        idx = np.searchsorted(tn, t, side="right") - 1
        inside = (idx >= 0) & (idx < tn.size - 1)
        out = np.zeros_like(t)
        out[inside] = slopes[idx[inside]]
        return out

    def discount(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-self.zero_rate(t) * t)

    def forward(self, t):
        """Instantaneous forward f(0, t) = R(t) + t R'(t), right-continuous at pillars."""
        t = np.asarray(t, dtype=float)
        return self.zero_rate(t) + t * self._slope(t)

    def forward_slope(self, t):
        """d/dt f(0, t) for the piecewise-linear zero curve (2 R' inside segments)."""
        return 2.0 * self._slope(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class HullWhiteParams:
    """Hull-White parameters with the drift fitted to ``curve``.

    The short rate is r(t) = x(t) + shift(t) with x a zero-mean OU process
    started at 0; ``shift`` and ``theta`` are two views of the same fit.
    """

    alpha_r: float
    eta_r: float
    r0: float
    curve: YieldCurve

    def __post_init__(self):
        if not self.alpha_r > 0.0:
            raise ValueError(f"alpha_r must be positive, got {self.alpha_r}")
        if self.eta_r < 0.0:
            raise ValueError(f"eta_r must be non-negative, got {self.eta_r}")

    def theta(self, t):
        a, s = self.alpha_r, self.eta_r
        t = np.asarray(t, dtype=float)
        return (self.curve.forward(t) + self.curve.forward_slope(t) / a
                + s * s / (2.0 * a * a) * (1.0 - np.exp(-2.0 * a * t)))

    def shift(self, t):
        a, s = self.alpha_r, self.eta_r
        t = np.asarray(t, dtype=float)
        return self.curve.forward(t) + s * s / (2.0 * a * a) * (1.0 - np.exp(-a * t)) ** 2

    def B(self, t, T):
        return (1.0 - np.exp(-self.alpha_r * (np.asarray(T) - np.asarray(t)))) / self.alpha_r

    def log_A(self, t, T):
        a, s = self.alpha_r, self.eta_r
        t = np.asarray(t, dtype=float)
        T = np.asarray(T, dtype=float)
        b = self.B(t, T)
        return (np.log(self.curve.discount(T) / self.curve.discount(t)) + b * self.curve.forward(t)
                - s * s / (4.0 * a) * (1.0 - np.exp(-2.0 * a * t)) * b * b)


def fit_theta(curve: YieldCurve, alpha_r: float, eta_r: float) -> HullWhiteParams:
    """Fit the Hull-White drift so the model reproduces ``curve`` at t=0."""
    if not alpha_r > 0.0:
        raise ValueError(f"alpha_r must be positive, got {alpha_r}")
    r0 = float(curve.forward(0.0))
    return HullWhiteParams(float(alpha_r), float(eta_r), r0, curve)


def zcb_price(t, T, r_t, params: HullWhiteParams):
    """Price at ``t`` of the zero-coupon bond maturing at ``T`` given short rate ``r_t``."""
    t_arr = np.asarray(t, dtype=float)
    T_arr = np.asarray(T, dtype=float)
    if np.any(t_arr > T_arr + 1e-12):
        raise ValueError("zcb_price requires t <= T")
    return np.exp(params.log_A(t_arr, T_arr) - params.B(t_arr, T_arr) * np.asarray(r_t, dtype=float))


def forward_rate(t, t1, t2, r_t, params: HullWhiteParams):
    """Simply-compounded forward rate for (t1, t2] seen at t."""
    if not t2 > t1:
        raise ValueError("forward period must have t2 > t1")
    if t > t1 + 1e-12:
        raise ValueError("forward_rate requires t <= t1")
    p1 = zcb_price(t, t1, r_t, params)
    p2 = zcb_price(t, t2, r_t, params)
    return (p1 - p2) / ((t2 - t1) * p2)


def zcb_option_price(t, option_maturity, bond_maturity, strike, kind, r_t, params: HullWhiteParams):
    """European option on a zero-coupon bond (call or put), Hull-White closed form."""
    if not (t <= option_maturity + 1e-12 and option_maturity <= bond_maturity + 1e-12):
        raise ValueError("need t <= option_maturity <= bond_maturity")
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")
    a, s = params.alpha_r, params.eta_r
    p_opt = zcb_price(t, option_maturity, r_t, params)
    p_bond = zcb_price(t, bond_maturity, r_t, params)
    sigma_p = s * params.B(option_maturity, bond_maturity) * np.sqrt(
        (1.0 - np.exp(-2.0 * a * (option_maturity - t))) / (2.0 * a))
    sign = 1.0 if kind == "call" else -1.0
    if np.all(sigma_p == 0.0):
        return np.maximum(sign * (p_bond - strike * p_opt), 0.0)
    h = np.log(p_bond / (strike * p_opt)) / sigma_p + 0.5 * sigma_p
    return sign * (p_bond * norm.cdf(sign * h) - strike * p_opt * norm.cdf(sign * (h - sigma_p)))
