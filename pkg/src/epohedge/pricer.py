"""Least-squares Monte Carlo valuation of the embedded prepayment option.

The value at a node splits into a rate spread R = K - F(tau_p) times the
discounted notional integral of the running period (a known part up to the
node plus an unknown remainder), plus the value of all later periods.  The
unknown remainder and the future value are conditional expectations given the
state (r, b, N), estimated backwards in time by polynomial regression.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
from scipy import linalg

from .market import zcb_price
from .paths import PathSet
from .prepay import MortgageSpec, NotionalPaths, epo_cashflows

DATE_TOL = 1e-9


@dataclass(frozen=True)
class Scaler:
    center: np.ndarray
    scale: np.ndarray
    keep: np.ndarray

    def transform(self, states):
        return (states[:, self.keep] - self.center) / self.scale


@dataclass(frozen=True)
class RegressionBasis:
    """Full polynomial of total degree ``degree`` in standardized state variables.

    Inputs with (numerically) zero cross-sectional variance are dropped, so at
    the first node only the constant survives.
    """

    degree: int = 2
    kind: str = "polynomial"
    inputs: tuple = ("r", "b", "N")

    def __post_init__(self):
        if self.kind != "polynomial":
            raise ValueError(f"unsupported basis kind {self.kind!r}")
        if self.degree < 0:
            raise ValueError("basis degree must be non-negative")

    def n_functions(self, n_inputs: int | None = None) -> int:
        d = len(self.inputs) if n_inputs is None else n_inputs
        return sum(len(list(combinations_with_replacement(range(d), p)))
                   for p in range(self.degree + 1))

    def scaler(self, states) -> Scaler:
        states = np.asarray(states, dtype=float)
        center = states.mean(axis=0)
        scale = states.std(axis=0)
        keep = scale > 1e-12 * np.maximum(1.0, np.abs(center))
        return Scaler(center[keep], scale[keep], keep)

    def design(self, states, scaler: Scaler | None = None) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        if scaler is None:
            scaler = self.scaler(states)
        z = scaler.transform(states)
        cols = [np.ones(states.shape[0])]
        for p in range(1, self.degree + 1):
            for combo in combinations_with_replacement(range(z.shape[1]), p):
                cols.append(np.prod(z[:, list(combo)], axis=1))
        return np.column_stack(cols)


@dataclass(frozen=True)
class LsmConfig:
    basis: RegressionBasis = field(default_factory=RegressionBasis)
    ridge: float = 1e-10

    def __post_init__(self):
        if self.ridge < 0.0:
            raise ValueError("ridge must be non-negative")


def _solve_normal(design, targets, ridge):
    n, m = design.shape
    gram = design.T @ design / n
    rhs = design.T @ targets / n
    penalty = np.full(m, ridge)
    penalty[0] = 0.0  # the constant is not shrunk
    gram[np.diag_indices(m)] += penalty
    if ridge == 0.0 and (n < m or np.linalg.matrix_rank(gram) < m):
        raise np.linalg.LinAlgError("rank-deficient regression design with ridge = 0")
    try:
        return linalg.solve(gram, rhs, assume_a="pos")
    except (linalg.LinAlgError, np.linalg.LinAlgError):
        return linalg.lstsq(gram, rhs)[0]


def regress(states, targets, basis: RegressionBasis = RegressionBasis(), ridge: float = 1e-10,
            scaler: Scaler | None = None) -> np.ndarray:
    """Least-squares coefficients of ``targets`` on the basis evaluated at ``states``.

    Minimizes the mean squared residual plus ``ridge`` times the squared
    norm of the non-constant coefficients.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    targets = np.asarray(targets, dtype=float)
    if states.shape[0] != targets.shape[0]:
        raise ValueError("states and targets disagree on the sample count")
    design = basis.design(states, scaler)
    if design.shape[0] < design.shape[1] and ridge == 0.0:
        raise np.linalg.LinAlgError("fewer samples than basis functions and ridge = 0")
    return _solve_normal(design, targets, ridge)


@dataclass(frozen=True)
class _Layout:
    """Per-node locators of the running period and the precomputed inputs."""

    payment: np.ndarray  # node is a payment date
    reset: np.ndarray    # node is a reset date
    after: np.ndarray    # node lies beyond the final payment
    final: int           # node index of the final payment


def _layout(paths: PathSet, spec: MortgageSpec):
    times = paths.times
    if abs(times[0] - spec.issue) > DATE_TOL:
        raise ValueError("grid must start at the mortgage issue date")
    if times[-1] < spec.maturity - DATE_TOL:
        raise ValueError("grid must cover the final payment date")
    grid = paths.grid
    pay_idx = grid.indices(spec.payment_dates)
    reset_idx = grid.indices(spec.reset_dates)
    n_nodes = times.size
    payment = np.zeros(n_nodes, bool)
    payment[pay_idx] = True
    reset = np.zeros(n_nodes, bool)
    reset[reset_idx] = True
    final = int(pay_idx[-1])
    after = np.arange(n_nodes) > final
    # next payment node and the reset opening its period
    nxt = np.searchsorted(pay_idx, np.arange(n_nodes), side="left")
    nxt_node = np.where(nxt < pay_idx.size, pay_idx[np.minimum(nxt, pay_idx.size - 1)], -1)
    prv_node = np.where(nxt < pay_idx.size, reset_idx[np.minimum(nxt, pay_idx.size - 1)], -1)
    return _Layout(payment, reset, after, final), nxt_node, prv_node


def _precompute(paths: PathSet, notionals: NotionalPaths, spec: MortgageSpec):
    """Bond to next payment P, rate spread R, known integral Ik and step integrals Iu."""
    layout, nxt_node, prv_node = _layout(paths, spec)
    times = paths.times
    n_paths, n_nodes = paths.r.shape
    steps = notionals.step_integrals(times)
    cum = np.cumsum(steps, axis=1)
    bond = np.ones((n_paths, n_nodes))
    spread = np.zeros((n_paths, n_nodes))
    known = np.zeros((n_paths, n_nodes))
    fix_cache = {}
    for k in range(n_nodes):
        if layout.after[k]:
            continue
        e, s = nxt_node[k], prv_node[k]
        t_e, t_s = times[e], times[s]
        if e != k:
            bond[:, k] = zcb_price(times[k], t_e, paths.r[:, k], paths.hw)
        if s not in fix_cache:
            p = zcb_price(t_s, t_e, paths.r[:, s], paths.hw)
            fix_cache[s] = (1.0 / p - 1.0) / (t_e - t_s)
        spread[:, k] = spec.fixed_rate - fix_cache[s]
        known[:, k] = cum[:, k] - cum[:, s]
    return layout, bond, spread, known, steps


def _states(paths: PathSet, notionals: NotionalPaths, k: int) -> np.ndarray:
    return np.column_stack([paths.r[:, k], paths.b[:, k], notionals.prepayment[:, k]])


def _backward(paths, notionals, spec, config, valuation=None):
    """Run the recursion on ``paths``; optionally apply the fitted maps to ``valuation``.

    Returns the cum-coupon value matrix of the fitting set and, if requested,
    of the valuation set.
    """
    layout, bond, spread, known, steps = _precompute(paths, notionals, spec)
    if valuation is not None:
        v_paths, v_notionals = valuation
        _, v_bond, v_spread, v_known, _ = _precompute(v_paths, v_notionals, spec)
    money = paths.money_account
    n_paths, n_nodes = paths.r.shape
    basis, ridge = config.basis, config.ridge

    vcum = np.zeros((n_paths, n_nodes))
    v_vcum = None if valuation is None else np.zeros((v_paths.n_paths, n_nodes))
    cfu = np.zeros(n_paths)
    fv = np.zeros(n_paths)
    for k in range(n_nodes - 1, -1, -1):
        if layout.after[k]:
            cfu[:] = 0.0
            fv[:] = 0.0
            continue
        v_cfu = v_fv = None
        if k == layout.final:
            # the final cash flow is known here; nothing remains beyond it
            cfu = np.zeros(n_paths)
            fv = np.zeros(n_paths)
            if valuation is not None:
                v_cfu = np.zeros(v_paths.n_paths)
                v_fv = np.zeros(v_paths.n_paths)
        else:
            disc = money[:, k] / money[:, k + 1]
            states = _states(paths, notionals, k)
            scaler = basis.scaler(states)
            design = basis.design(states, scaler)
            if layout.reset[k]:
                beta_fv = _solve_normal(design, disc * vcum[:, k + 1], ridge)
                beta_cf = None
                cfu = np.zeros(n_paths)
            else:
                y_cf = disc * (bond[:, k + 1] * steps[:, k + 1] + cfu)
                y_fv = disc * fv
                beta_cf = _solve_normal(design, y_cf, ridge)
                beta_fv = _solve_normal(design, y_fv, ridge)
                cfu = design @ beta_cf
            fv = design @ beta_fv
            if valuation is not None:
                v_design = basis.design(_states(v_paths, v_notionals, k), scaler)
                v_cfu = np.zeros(v_paths.n_paths) if beta_cf is None else v_design @ beta_cf
                v_fv = v_design @ beta_fv
        vcum[:, k] = spread[:, k] * (bond[:, k] * known[:, k] + cfu) + fv
        if valuation is not None:
            v_vcum[:, k] = v_spread[:, k] * (v_bond[:, k] * v_known[:, k] + v_cfu) + v_fv
    out = (vcum, layout, spread, known)
    if valuation is None:
        return out, None
    return out, (v_vcum, v_spread, v_known)


def _ex_coupon(vcum, layout, spread, known):
    # at payment dates the running period's cash flow has just been paid
    v = vcum.copy()
    v[:, layout.payment] -= spread[:, layout.payment] * known[:, layout.payment]
    v[:, layout.after] = 0.0
    return v


def price_epo(paths: PathSet, notionals: NotionalPaths, spec: MortgageSpec,
              config: LsmConfig = LsmConfig(), fit_on=None) -> np.ndarray:
    """EPO value on every path and grid node.

    Values at payment dates are ex-coupon (the cash flow paid there belongs
    to the cash account), so the value is zero from the final payment on.
    ``fit_on=(paths, notionals)`` estimates the regressions on an independent
    set and applies them to ``paths`` (out-of-sample valuation).
    """
    if fit_on is None:
        (vcum, layout, spread, known), _ = _backward(paths, notionals, spec, config)
        return _ex_coupon(vcum, layout, spread, known)
    fit_paths, fit_notionals = fit_on
    if not np.array_equal(fit_paths.times, paths.times):
        raise ValueError("fitting and valuation paths must share the time grid")
    (_, layout, _, _), (v_vcum, v_spread, v_known) = _backward(
        fit_paths, fit_notionals, spec, config, valuation=(paths, notionals))
    return _ex_coupon(v_vcum, layout, v_spread, v_known)


@dataclass(frozen=True)
class EpoPrice:
    """Time-zero EPO value with its Monte Carlo standard error.

    ``direct`` is the plain average of discounted cash flows, the quantity
    whose standard error is reported.
    """

    value: float
    stderr: float
    direct: float
    notional0: float
    values: np.ndarray = field(default=None, repr=False)

    @property
    def bps(self) -> float:
        return 1e4 * self.value / self.notional0

    @property
    def stderr_bps(self) -> float:
        return 1e4 * self.stderr / self.notional0


def discounted_cashflows(paths: PathSet, notionals: NotionalPaths, spec: MortgageSpec) -> np.ndarray:
    cf = epo_cashflows(paths, notionals, spec)
    idx = paths.grid.indices(spec.payment_dates)
    return cf / paths.money_account[:, idx]


def price_epo_at_zero(paths: PathSet, notionals: NotionalPaths, spec: MortgageSpec,
                      config: LsmConfig = LsmConfig(), fit_on=None, keep_values: bool = False) -> EpoPrice:
    values = price_epo(paths, notionals, spec, config, fit_on)
    pv = discounted_cashflows(paths, notionals, spec).sum(axis=1)
    stderr = float(pv.std(ddof=1) / np.sqrt(pv.size)) if pv.size > 1 else float("nan")
    return EpoPrice(float(values[:, 0].mean()), stderr, float(pv.mean()), spec.notional0,
                    values if keep_values else None)
