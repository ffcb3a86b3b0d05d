"""Static hedging of the EPO wealth with swaps and swaptions.

Losses are time integrals of per-node statistics of the signed distance
D = W_V - sum_i w_i W_i.  For the mean-squared loss the problem is a
quadratic in w with closed-form minimizer; adding the right expected
shortfall needs a numerical search.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .instruments import WealthPath

SIDES = ("upper", "lower")


@dataclass(frozen=True)
class LossConfig:
    """Loss L = int alpha E|D|^p dt + k int alpha ES+_q(D) dt over ``window``.

    ``alpha_weight`` is a callable of time (default 1) and must integrate to
    the window length.
    """

    p: float = 2.0
    q: float = 0.9
    k: float = 0.0
    alpha_weight: object = None
    window: tuple = None

    def __post_init__(self):
        if self.p < 1.0:
            raise ValueError("moment order p must be >= 1")
        if not 0.0 < self.q < 1.0:
            raise ValueError("shortfall level q must lie in (0, 1)")
        if self.k < 0.0:
            raise ValueError("shortfall weight k must be non-negative")

    def nodes(self, times):
        """Window node mask and the alpha weights on those nodes (normalization checked)."""
        times = np.asarray(times, dtype=float)
        lo, hi = (times[0], times[-1]) if self.window is None else self.window
        if lo < times[0] - 1e-9 or hi > times[-1] + 1e-9 or hi <= lo:
            raise ValueError(f"monitoring window {(lo, hi)} outside the time grid")
        mask = (times >= lo - 1e-9) & (times <= hi + 1e-9)
        if abs(times[mask][0] - lo) > 1e-9 or abs(times[mask][-1] - hi) > 1e-9:
            raise ValueError("monitoring window ends must be grid nodes")
        t = times[mask]
        alpha = np.ones_like(t) if self.alpha_weight is None else np.asarray(self.alpha_weight(t), float)
        if abs(np.trapezoid(alpha, t) - (hi - lo)) > 1e-9 * max(1.0, hi - lo):
            raise ValueError("alpha weight must integrate to the window length")
        return mask, t, alpha


@dataclass(frozen=True)
class LossValue:
    total: float
    moment: float
    shortfall: float


@dataclass(frozen=True)
class HedgeSolution:
    allocations: np.ndarray
    loss_value: float
    loss_breakdown: LossValue = None
    gradient_norm: float = float("nan")
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


def signed_distance(epo_wealth, instrument_wealths, w) -> np.ndarray:
    """D = W_V - sum_i w_i W_i, node-wise on every path."""
    base = epo_wealth.wealth if isinstance(epo_wealth, WealthPath) else np.asarray(epo_wealth)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if len(instrument_wealths) != w.size:
        raise ValueError("one allocation per instrument is required")
    out = np.array(base, dtype=float, copy=True)
    for wi, inst in zip(w, instrument_wealths):
        x = inst.wealth if isinstance(inst, WealthPath) else np.asarray(inst)
        if x.shape != out.shape:
            raise ValueError("instrument wealth shape does not match the EPO wealth")
        out -= wi * x
    return out


def expected_shortfall(sample, q: float, side: str = "upper", axis: int = 0):
    """Empirical expected shortfall beyond the nearest-rank q-quantile.

    ``upper`` averages the values strictly above the quantile; if there are
    none, the quantile itself is returned.  ``lower`` is the reflection
    -ES+(-sample).
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if side == "lower":
        return -expected_shortfall(-x, q, "upper", axis)
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    rank = int(np.ceil(q * n)) - 1
    quantile = np.partition(x, rank, axis=0)[rank]
    above = x > quantile
    count = above.sum(axis=0)
    total = np.where(above, x, 0.0).sum(axis=0)
    es = np.where(count > 0, total / np.maximum(count, 1), quantile)
    return float(es) if np.ndim(es) == 0 else es


def loss(distance, times, config: LossConfig) -> LossValue:
    """Time-integrated moment and shortfall losses of a distance matrix [paths x nodes]."""
    distance = np.asarray(distance, dtype=float)
    mask, t, alpha = config.nodes(times)
    d = distance[:, mask]
    moment = np.trapezoid(alpha * np.mean(np.abs(d) ** config.p, axis=0), t)
    shortfall = np.trapezoid(alpha * expected_shortfall(d, config.q), t)
    return LossValue(float(moment + config.k * shortfall), float(moment), float(shortfall))


def quadratic_coefficients(epo_wealth, instrument_wealths, times, alpha_weight=None, window=None):
    """Coefficients (X, y, z) of the mean-squared loss w'Xw - 2 y'w + z.

    X_ij = int alpha^2 E[W_i W_j], y_i = int alpha^2 E[W_V W_i], z = int alpha^2 E[W_V^2].
    """
    mask, t, alpha = LossConfig(alpha_weight=alpha_weight, window=window).nodes(times)
    weight = alpha ** 2
    base = (epo_wealth.wealth if isinstance(epo_wealth, WealthPath) else np.asarray(epo_wealth))[:, mask]
    cols = [(w.wealth if isinstance(w, WealthPath) else np.asarray(w))[:, mask] for w in instrument_wealths]
    for i, c in enumerate(cols):
        if not np.any(c):
            raise ValueError(f"instrument {i} has identically zero wealth")
    n_paths = base.shape[0]

    def integral(a, b):
        return float(np.trapezoid(weight * np.einsum("pk,pk->k", a, b) / n_paths, t))

    m = len(cols)
    x = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            x[i, j] = x[j, i] = integral(cols[i], cols[j])
    y = np.array([integral(base, c) for c in cols])
    z = integral(base, base)
    return x, y, z


def quadratic_loss(w, x, y, z) -> float:
    w = np.asarray(w, dtype=float)
    return float(w @ x @ w - 2.0 * y @ w + z)


def solve_quadratic(x, y, z: float = None) -> HedgeSolution:
    """Minimizer w* = X^+ y of w'Xw - 2y'w + z (pseudo-inverse if X is singular)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.linalg.pinv(x, hermitian=True) @ y
    grad = 2.0 * (x @ w - y)
    value = float("nan") if z is None else quadratic_loss(w, x, y, z)
    scale = max(np.linalg.norm(2.0 * y), np.finfo(float).tiny)
    return HedgeSolution(w, value, LossValue(value, value, float("nan")),
                         float(np.linalg.norm(grad) / scale))


class _GeneralLoss:
    """Loss and its (sub)gradient in w on node-major copies of the wealth matrices."""

    def __init__(self, base, cols, t, alpha, config):
        self.base = np.ascontiguousarray(base.T)
        self.cols = np.ascontiguousarray(np.transpose(cols, (0, 2, 1)))
        self.weight = _trapezoid_weights(t) * alpha
        self.config = config

    def __call__(self, w, with_grad=False):
        cfg = self.config
        d = self.base - np.tensordot(w, self.cols, axes=1)
        n = d.shape[1]
        absd = np.abs(d)
        moment = float(self.weight @ np.mean(absd ** cfg.p, axis=1))
        rank = int(np.ceil(cfg.q * n)) - 1
        quantile = np.partition(d, rank, axis=1)[:, rank]
        above = d > quantile[:, None]
        count = above.sum(axis=1)
        es = np.where(count > 0, np.where(above, d, 0.0).sum(axis=1) / np.maximum(count, 1), quantile)
        shortfall = float(self.weight @ es)
        value = LossValue(moment + cfg.k * shortfall, moment, shortfall)
        if not with_grad:
            return value
        dm = cfg.p * absd ** (cfg.p - 1.0) * np.sign(d) / n
        grad = np.empty(len(w))
        for i, c in enumerate(self.cols):
            g_m = -np.einsum("kp,kp->k", dm, c)
            g_s = -np.where(above, c, 0.0).sum(axis=1) / np.maximum(count, 1)
            grad[i] = self.weight @ (g_m + cfg.k * g_s)
        return value, grad


def _trapezoid_weights(t):
    h = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def solve_general(epo_wealth, instrument_wealths, times, config: LossConfig, initial=None,
                  maxiter: int = 200, polish_iter: int = 60) -> HedgeSolution:
    """Local minimizer of the moment plus expected-shortfall loss.

    A quasi-Newton search on the analytic subgradient is followed by a short
    Nelder-Mead polish.  It starts from the mean-squared solution unless
    ``initial`` is given and returns the best point visited, so the loss never
    exceeds the loss at the start.
    """
    mask, t, alpha = config.nodes(times)
    base = (epo_wealth.wealth if isinstance(epo_wealth, WealthPath) else np.asarray(epo_wealth))[:, mask]
    cols = np.stack([(w.wealth if isinstance(w, WealthPath) else np.asarray(w))[:, mask]
                     for w in instrument_wealths])
    if initial is None:
        qx, qy, _ = quadratic_coefficients(base, list(cols), t, config.alpha_weight)
        initial = solve_quadratic(qx, qy).allocations
    initial = np.asarray(initial, dtype=float)
    objective = _GeneralLoss(base, cols, t, alpha, config)
    del base, cols

    best = {"w": initial, "v": objective(initial)}

    def track(w, with_grad):
        out = objective(w, with_grad)
        v = out[0] if with_grad else out
        if v.total < best["v"].total:
            best["w"], best["v"] = np.array(w), v
        return out

    # search in units of the starting allocation so all coordinates are O(1)
    scale = np.maximum(np.abs(initial), 1.0)

    def fun_grad(u):
        v, g = track(u * scale, True)
        return v.total, g * scale

    res = optimize.minimize(fun_grad, initial / scale, jac=True, method="BFGS",
                            options={"maxiter": maxiter, "gtol": 1e-8})
    start = best["w"] / scale
    simplex = np.vstack([start] + [start + 0.01 * e for e in np.eye(start.size)])
    res2 = optimize.minimize(lambda u: track(u * scale, False).total, start, method="Nelder-Mead",
                             options={"initial_simplex": simplex, "maxiter": polish_iter,
                                      "xatol": 1e-6, "fatol": 1e-10 * max(1.0, abs(best["v"].total))})
    w = best["w"]
    _, grad = objective(w, True)
    return HedgeSolution(w, best["v"].total, best["v"], float(np.linalg.norm(grad)),
                         bool(res.success or res2.success),
                         {"initial": initial, "evaluations": int(res.nfev + res2.nfev)})


def integrated_distance(distance, times, window=None) -> np.ndarray:
    """Per-path time integral of the signed distance over ``window``."""
    mask, t, _ = LossConfig(window=window).nodes(times)
    return np.trapezoid(np.asarray(distance)[:, mask], t, axis=1)


def initial_cost(allocations, instrument_values0) -> float:
    """Time-zero cost of the hedge portfolio, sum_i w_i S_i(t0)."""
    return float(np.dot(allocations, instrument_values0))
