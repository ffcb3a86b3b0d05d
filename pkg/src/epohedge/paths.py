"""Seeded joint simulation of the short rate and the behavioural factor.

Both factors are Gaussian OU-type processes, so each step is sampled from the
exact transition law; the two increments are correlated through a Cholesky
factor of their step covariance.  Random numbers come from counter-based
Philox streams keyed by (seed, block of paths), which keeps path ``i``
identical whatever the path count or worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .market import HullWhiteParams

GRID_TOL = 1e-12
BLOCK_SIZE = 4096


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray
    reset: np.ndarray = None
    payment: np.ndarray = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("time grid must be a non-empty 1-D array")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("time grid must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        for name in ("reset", "payment"):
            mask = getattr(self, name)
            mask = np.zeros(times.size, bool) if mask is None else np.asarray(mask, bool)
            mask.setflags(write=False)
            object.__setattr__(self, name, mask)

    def __len__(self):
        return self.times.size

    @property
    def t0(self) -> float:
        return float(self.times[0])

    def index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9:
            raise ValueError(f"time {t} is not a grid node")
        return k

    def indices(self, ts) -> np.ndarray:
        return np.array([self.index(t) for t in ts], dtype=int)


def make_grid(t0: float, t_end: float, steps_per_year: int = 12,
              reset_dates=(), payment_dates=(), extra_dates=()) -> TimeGrid:
    """Uniform grid on [t0, t_end] merged with the given dates (dedup at 1e-12)."""
    if steps_per_year < 1:
        raise ValueError("steps_per_year must be >= 1")
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")
    n = int(np.ceil((t_end - t0) * steps_per_year - 1e-9))
    base = t0 + np.arange(n + 1) / steps_per_year
    base[-1] = t_end
    dates = np.concatenate([np.asarray(reset_dates, float), np.asarray(payment_dates, float),
                            np.asarray(extra_dates, float)])
    if np.any(dates < t0 - GRID_TOL) or np.any(dates > t_end + GRID_TOL):
        raise ValueError("dates must lie inside [t0, t_end]")
    merged = np.sort(np.concatenate([base, dates]))
    keep = np.concatenate([[True], np.diff(merged) > GRID_TOL])
    times = merged[keep]
    # snap to the supplied dates so equality lookups are exact
    for d in dates:
        times[np.argmin(np.abs(times - d))] = d

    def mark(ds):
        m = np.zeros(times.size, bool)
        for d in ds:
            m[np.argmin(np.abs(times - d))] = True
        return m

    return TimeGrid(times, mark(reset_dates), mark(payment_dates))


@dataclass(frozen=True)
class OUParams:
    alpha_b: float
    theta_b: float
    eta_b: float
    b0: float = 0.0
    measure: str = "real-world"

    def __post_init__(self):
        if not self.alpha_b > 0.0:
            raise ValueError(f"alpha_b must be positive, got {self.alpha_b}")
        if self.eta_b < 0.0:
            raise ValueError(f"eta_b must be non-negative, got {self.eta_b}")
        if self.measure not in ("real-world", "risk-neutral"):
            raise ValueError(f"unknown measure tag {self.measure!r}")

    def mean(self, t):
        return self.theta_b + (self.b0 - self.theta_b) * np.exp(-self.alpha_b * np.asarray(t))

    def variance(self, t):
        a = self.alpha_b
        return self.eta_b ** 2 * (1.0 - np.exp(-2.0 * a * np.asarray(t))) / (2.0 * a)


@dataclass(frozen=True)
class MarketPriceOfRisk:
    """Affine market price of risk lambda(t) = lambda0 + lambda1 * b(t)."""

    lambda0: float = 0.0
    lambda1: float = 0.0


def girsanov_map(ou_p: OUParams, mpr: MarketPriceOfRisk) -> OUParams:
    """Risk-neutral OU parameters induced by an affine market price of risk."""
    alpha_q = ou_p.alpha_b + ou_p.eta_b * mpr.lambda1
    if not alpha_q > 0.0:
        raise ValueError(
            f"inadmissible market price of risk: alpha_b + eta_b*lambda1 = {alpha_q} <= 0")
    theta_q = (ou_p.alpha_b * ou_p.theta_b - ou_p.eta_b * mpr.lambda0) / alpha_q
    return OUParams(alpha_q, theta_q, ou_p.eta_b, ou_p.b0, "risk-neutral")


def market_price_of_risk(ou_p: OUParams, alpha_q: float, theta_q: float) -> MarketPriceOfRisk:
    """Inverse of :func:`girsanov_map` for given risk-neutral (alpha, theta)."""
    if ou_p.eta_b == 0.0:
        raise ValueError("market price of risk is undefined for eta_b = 0")
    lambda1 = (alpha_q - ou_p.alpha_b) / ou_p.eta_b
    lambda0 = (ou_p.alpha_b * ou_p.theta_b - alpha_q * theta_q) / ou_p.eta_b
    return MarketPriceOfRisk(lambda0, lambda1)


@dataclass(frozen=True)
class PathSet:
    grid: TimeGrid
    r: np.ndarray
    b: np.ndarray
    money_account: np.ndarray
    seed: int
    correlation: float
    hw: HullWhiteParams = field(repr=False, default=None)
    ou: OUParams = field(repr=False, default=None)

    @property
    def n_paths(self) -> int:
        return self.r.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def _freeze(a):
    a.setflags(write=False)
    return a


def _step_coefficients(hw, ou, rho, dt):
    ar, sr = hw.alpha_r, hw.eta_r
    ab, sb = ou.alpha_b, ou.eta_b
    var_x = sr ** 2 * (1.0 - np.exp(-2.0 * ar * dt)) / (2.0 * ar)
    var_b = sb ** 2 * (1.0 - np.exp(-2.0 * ab * dt)) / (2.0 * ab)
    cov = rho * sr * sb * (1.0 - np.exp(-(ar + ab) * dt)) / (ar + ab)
    l11 = np.sqrt(var_x)
    l21 = np.divide(cov, l11, out=np.zeros_like(cov), where=l11 > 0.0)
    l22 = np.sqrt(np.maximum(var_b - l21 ** 2, 0.0))
    return np.exp(-ar * dt), np.exp(-ab * dt), l11, l21, l22


def _block_normals(seed: int, block: int, n_steps: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=(block,))
    rng = np.random.Generator(np.random.Philox(ss))
    return rng.standard_normal((BLOCK_SIZE, n_steps, 2))


def _simulate_factors(hw, ou, rho, grid, n_paths, seed, workers, with_rate=True):
    times = grid.times
    n_nodes = times.size
    dt = np.diff(times)
    decay_x, decay_b, l11, l21, l22 = _step_coefficients(hw, ou, rho, dt)
    x = np.zeros((n_paths, n_nodes)) if with_rate else None
    b = np.empty((n_paths, n_nodes))
    b[:, 0] = ou.b0
    theta = ou.theta_b

    def run_block(block):
        lo = block * BLOCK_SIZE
        hi = min(lo + BLOCK_SIZE, n_paths)
        if n_nodes == 1:
            return
        z = _block_normals(seed, block, n_nodes - 1)[: hi - lo]
        bs = b[lo:hi]
        for k in range(n_nodes - 1):
            z1 = z[:, k, 0]
            bs[:, k + 1] = (theta + (bs[:, k] - theta) * decay_b[k]
                            + l21[k] * z1 + l22[k] * z[:, k, 1])
        if with_rate:
            xs = x[lo:hi]
            for k in range(n_nodes - 1):
                xs[:, k + 1] = xs[:, k] * decay_x[k] + l11[k] * z[:, k, 0]

    n_blocks = -(-n_paths // BLOCK_SIZE)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, range(n_blocks)))
    else:
        for blk in range(n_blocks):
            run_block(blk)
    return x, b


def _check_inputs(rho, n_paths, grid):
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if grid is None or len(grid) < 1:
        raise ValueError("empty time grid")


def simulate_paths(hw: HullWhiteParams, ou: OUParams, rho: float, grid: TimeGrid,
                   n_paths: int, seed: int, workers: int = 1) -> PathSet:
    """Simulate ``n_paths`` joint (r, b) paths on ``grid`` and the money account.

    The money account is exp of the trapezoidal integral of r.  Output is
    bit-identical for equal arguments regardless of ``workers``.
    """
    _check_inputs(rho, n_paths, grid)
    times = grid.times
    r, b = _simulate_factors(hw, ou, rho, grid, n_paths, seed, workers)
    r += hw.shift(times)[None, :]
    if times.size > 1:
        money = np.exp(cumulative_trapezoid(r, times, axis=1, initial=0.0))
    else:
        money = np.ones((n_paths, 1))
    return PathSet(grid, _freeze(r), _freeze(b), _freeze(money), int(seed), float(rho), hw, ou)


def with_behaviour(paths: PathSet, ou: OUParams, workers: int = 1) -> PathSet:
    """Re-simulate only the behavioural factor under ``ou`` with the same shocks.

    The short rate and money account are shared with ``paths``; this is the
    common-random-numbers device used across market prices of risk.  The
    result equals ``simulate_paths`` called with ``ou`` and the same seed.
    """
    _, b = _simulate_factors(paths.hw, ou, paths.correlation, paths.grid, paths.n_paths,
                             paths.seed, workers, with_rate=False)
    return replace(paths, b=_freeze(b), ou=ou)


def trapezoid(values, times, a: float, b: float):
    """Composite trapezoidal rule of ``values`` over the grid nodes in [a, b].

    ``values`` may carry leading axes (e.g. paths); integration is along the last.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if a > b:
        raise ValueError("need a <= b")
    ia = int(np.argmin(np.abs(times - a)))
    ib = int(np.argmin(np.abs(times - b)))
    if abs(times[ia] - a) > 1e-9 or abs(times[ib] - b) > 1e-9:
        raise ValueError("integration bounds must be grid nodes")
    if ia == ib:
        return np.zeros(values.shape[:-1]) if values.ndim > 1 else 0.0
    seg = values[..., ia:ib + 1]
    h = np.diff(times[ia:ib + 1])
    return np.sum(0.5 * (seg[..., 1:] + seg[..., :-1]) * h, axis=-1)
