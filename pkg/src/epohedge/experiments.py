"""Seeded experiment presets and the shared simulate / price / hedge pipeline.

Each preset is a configuration template (with its own seed) plus a function
turning a validated :class:`RunConfig` into named CSV tables.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np

from .config import INSTRUMENT_NAMES, RunConfig
from .csvio import emit_csv
from .hedge import (LossConfig, integrated_distance, loss, quadratic_coefficients, signed_distance,
                    solve_general, solve_quadratic)
from .instruments import WealthPath, epo_wealth, instrument_wealth
from .paths import MarketPriceOfRisk, PathSet, girsanov_map, simulate_paths, with_behaviour
from .prepay import epo_cashflows, incentive_swap_rate, notional_paths
from .pricer import EpoPrice, discounted_cashflows, price_epo_at_zero
from .robust import (NodalProblem, ascent_trajectories, build_domain, classify_and_boundary,
                     compass_check, evaluate_nodal_grid, find_critical_points, fit_spline,
                     semi_robustness)

log = logging.getLogger(__name__)

EMPIRICAL_SIGMOID = {"kind": "tanh", "l": 0.0231, "u": 0.0447, "a": 84.0}
RATIONAL_SIGMOID = {"kind": "rational", "l": 0.0, "u": 0.0447, "a": 0.0}
ETA_SWEEP = (0.0, 0.005, 0.01, 0.015, 0.02)
LAMBDA_SWEEP = ((0.0, 0.0), (-2.0, 0.0), (-1.0, 0.0), (1.0, 0.0), (2.0, 0.0),
                (0.0, -100.0), (0.0, -50.0), (0.0, 50.0), (0.0, 100.0))
# strategies 1..7: every non-empty subset of the roster, singles first
STRATEGIES = {1: ("swap",), 2: ("receiver_swaption",), 3: ("payer_swaption",),
              4: ("swap", "receiver_swaption"), 5: ("swap", "payer_swaption"),
              6: ("receiver_swaption", "payer_swaption"), 7: INSTRUMENT_NAMES}
ES_WEIGHTS = (0.0, 10.0, 20.0)
HISTOGRAM_BINS = 200


class NumericalError(RuntimeError):
    """A regression, optimizer or root search failed to produce a usable result."""


# pipeline

def simulate(cfg: RunConfig, ou=None) -> PathSet:
    """Joint (r, b) paths under the pricing measure of ``cfg`` (or the given OU)."""
    return simulate_paths(cfg.hull_white(), cfg.ou_q() if ou is None else ou, cfg.data["correlation"],
                          cfg.grid(), cfg.n_paths, cfg.seed, cfg.workers)


def price(cfg: RunConfig, paths: PathSet | None = None, kappa=None, keep_values=False):
    """(EpoPrice, notionals, paths) for the mortgage of ``cfg``."""
    paths = simulate(cfg) if paths is None else paths
    spec = cfg.mortgage()
    notionals = notional_paths(spec, cfg.sigmoid(), paths, cfg.data["prepayment_mode"], kappa)
    return price_epo_at_zero(paths, notionals, spec, cfg.lsm(), keep_values=keep_values), notionals, paths


@dataclass
class HedgeInputs:
    paths: PathSet
    epo: WealthPath
    instruments: dict
    values0: dict
    epo_price: EpoPrice

    @property
    def times(self):
        return self.paths.times

    def wealths(self, names):
        return [self.instruments[n] for n in names]


def hedge_inputs(cfg: RunConfig, names=INSTRUMENT_NAMES) -> HedgeInputs:
    """EPO and instrument wealth paths on one simulated path set."""
    result, notionals, paths = price(cfg, keep_values=True)
    spec = cfg.mortgage()
    cash = epo_cashflows(paths, notionals, spec)
    epo = epo_wealth(result.values, cash, paths, spec.payment_dates)
    instruments, values0 = {}, {}
    for n in names:
        w = instrument_wealth(cfg.instrument(n), paths)
        instruments[n] = w
        values0[n] = float(w.value[0, 0])
    return HedgeInputs(paths, epo, instruments, values0, result)


def optimal_hedge(inputs: HedgeInputs, names, config: LossConfig):
    """Loss-minimizing allocation for the instruments ``names``."""
    wealths = inputs.wealths(names)
    if config.k == 0.0 and config.p == 2.0:
        x, y, z = quadratic_coefficients(inputs.epo, wealths, inputs.times, window=config.window)
        sol = solve_quadratic(x, y, z)
        if not np.all(np.isfinite(sol.allocations)):
            raise NumericalError("mean-squared hedge produced non-finite allocations")
        return sol
    sol = solve_general(inputs.epo, wealths, inputs.times, config)
    if not np.all(np.isfinite(sol.allocations)) or not np.isfinite(sol.loss_value):
        raise NumericalError("shortfall hedge optimizer produced non-finite output")
    return sol


def _full_allocation(names, allocations):
    out = {n: float("nan") for n in INSTRUMENT_NAMES}
    out.update({n: float(w) for n, w in zip(names, allocations)})
    return out


# presets

def _fig4a(cfg: RunConfig) -> dict:
    rows = {k: [] for k in ("amortization", "sigmoid", "eta_b", "v0_bps", "stderr_bps", "direct_bps")}
    for amort in ("bullet", "linear"):
        for label, sig in (("rational", RATIONAL_SIGMOID), ("empirical", EMPIRICAL_SIGMOID)):
            for eta in ETA_SWEEP:
                run = cfg.replace(mortgage={"amortization": amort}, sigmoid=sig, behaviour={"eta": eta})
                res, _, _ = price(run)
                log.info("fig4a %s %s eta=%g: %.3f bps", amort, label, eta, res.bps)
                for k, v in zip(rows, (amort, label, eta, res.bps, res.stderr_bps,
                                       1e4 * res.direct / res.notional0)):
                    rows[k].append(v)
    return {"fig4a": rows}


def _fig4b(cfg: RunConfig) -> dict:
    """V(0) over the eta sweep for several market prices of risk, with paired differences."""
    keys = ("lambda0", "lambda1", "alpha_q", "theta_q", "eta_b", "v0_bps", "stderr_bps",
            "diff_vs_zero_bps", "diff_stderr_bps")
    rows = {k: [] for k in keys}
    spec = cfg.mortgage()
    for eta in ETA_SWEEP:
        run = cfg.replace(behaviour={"eta": eta}, mpr={"lambda0": 0.0, "lambda1": 0.0})
        base_paths = simulate(run)
        kappa = incentive_swap_rate(spec, base_paths)
        reference = None
        for lam0, lam1 in LAMBDA_SWEEP:
            ou_q = girsanov_map(run.ou_p(), MarketPriceOfRisk(lam0, lam1))
            paths = with_behaviour(base_paths, ou_q)
            res, notionals, _ = price(run, paths, kappa)
            pv = 1e4 * discounted_cashflows(paths, notionals, spec).sum(axis=1) / spec.notional0
            if reference is None:
                reference = pv
            diff = pv - reference
            se = float(diff.std(ddof=1) / np.sqrt(diff.size))
            log.info("fig4b eta=%g lambda=(%g, %g): %.3f bps", eta, lam0, lam1, res.bps)
            for k, v in zip(keys, (lam0, lam1, ou_q.alpha_b, ou_q.theta_b, eta, res.bps, res.stderr_bps,
                                   float(diff.mean()), se)):
                rows[k].append(v)
    return {"fig4b": rows}


def _table4(cfg: RunConfig) -> dict:
    inputs = hedge_inputs(cfg)
    lc = LossConfig(window=cfg.loss().window)
    no_hedge = loss(inputs.epo.wealth, inputs.times, lc).moment
    keys = ("strategy",) + INSTRUMENT_NAMES + ("loss", "loss_pct", "initial_cost")
    rows = {k: [] for k in keys}

    def add(strategy, alloc, value, cost):
        for k, v in zip(keys, (strategy, *alloc.values(), value, 100.0 * value / no_hedge, cost)):
            rows[k].append(v)

    add(0, _full_allocation((), ()), no_hedge, 0.0)
    for s, names in STRATEGIES.items():
        sol = optimal_hedge(inputs, names, lc)
        cost = float(np.dot(sol.allocations, [inputs.values0[n] for n in names]))
        log.info("table4 strategy %d: w=%s loss=%.1f", s, np.round(sol.allocations, 1), sol.loss_value)
        add(s, _full_allocation(names, sol.allocations), sol.loss_value, cost)
    return {"table4": rows}


def _es_solutions(cfg: RunConfig, inputs: HedgeInputs):
    base = cfg.loss()
    out = []
    for k in ES_WEIGHTS:
        lc = LossConfig(2.0, base.q, k, None, base.window)
        sol = optimal_hedge(inputs, INSTRUMENT_NAMES, lc)
        d = signed_distance(inputs.epo, inputs.wealths(INSTRUMENT_NAMES), sol.allocations)
        parts = loss(d, inputs.times, lc)
        log.info("table5 k=%g: w=%s moment=%.1f shortfall=%.2f", k, np.round(sol.allocations, 1),
                 parts.moment, parts.shortfall)
        out.append((k, sol.allocations, parts))
    return out


def _table5(cfg: RunConfig) -> dict:
    inputs = hedge_inputs(cfg)
    keys = ("k",) + INSTRUMENT_NAMES + ("loss_m2", "loss_es", "loss_total", "initial_cost")
    rows = {k: [] for k in keys}
    for k, w, parts in _es_solutions(cfg, inputs):
        cost = float(np.dot(w, [inputs.values0[n] for n in INSTRUMENT_NAMES]))
        for key, v in zip(keys, (k, *w, parts.moment, parts.shortfall, parts.total, cost)):
            rows[key].append(v)
    return {"table5": rows}


def _histograms(panel_series: dict) -> dict:
    """Counts of each series on bins shared within its panel."""
    rows = {k: [] for k in ("panel", "series", "bin_left", "bin_right", "count")}
    for panel, series in panel_series.items():
        lo = min(float(s.min()) for s in series.values())
        hi = max(float(s.max()) for s in series.values())
        edges = np.linspace(lo, hi, HISTOGRAM_BINS + 1)
        for name, sample in series.items():
            counts, _ = np.histogram(sample, bins=edges)
            for left, right, c in zip(edges[:-1], edges[1:], counts):
                for key, v in zip(rows, (panel, name, left, right, int(c))):
                    rows[key].append(v)
    return rows


def _integrated(inputs: HedgeInputs, names, w, window):
    d = signed_distance(inputs.epo, inputs.wealths(names), w) if names else inputs.epo.wealth
    return integrated_distance(d, inputs.times, window)


def _fig5(cfg: RunConfig) -> dict:
    inputs = hedge_inputs(cfg)
    lc = LossConfig(window=cfg.loss().window)
    panels = {"a": {"0": _integrated(inputs, (), (), lc.window)}, "b": {}}
    for s, panel in ((1, "a"), (2, "b"), (3, "b")):
        names = STRATEGIES[s]
        w = optimal_hedge(inputs, names, lc).allocations
        panels[panel][f"L2_{s}"] = _integrated(inputs, names, w, lc.window)
    panels["b"]["0"] = panels["a"]["0"]
    return {"fig5": _histograms(panels)}


def _fig6(cfg: RunConfig) -> dict:
    inputs = hedge_inputs(cfg)
    lc = LossConfig(window=cfg.loss().window)
    panels = {"a": {}, "b": {}}
    for s in (1, 4, 7):
        names = STRATEGIES[s]
        w = optimal_hedge(inputs, names, lc).allocations
        panels["a"][f"L2_{s}"] = _integrated(inputs, names, w, lc.window)
    for k, w, _ in _es_solutions(cfg, inputs):
        panels["b"][f"k{int(k)}"] = _integrated(inputs, INSTRUMENT_NAMES, w, lc.window)
    return {"fig6": _histograms(panels)}


def robust_tables(cfg: RunConfig, progress=None, gradient_samples: int = 50) -> dict:
    """Nodal surface, gradient field, solution report and ascent trajectories."""
    paths = simulate(cfg, cfg.ou_p())
    names = tuple(cfg.data["roster"])
    problem = NodalProblem(paths, cfg.mortgage(), cfg.sigmoid(), cfg.roster(names), cfg.lsm(),
                           cfg.data["prepayment_mode"], cfg.loss().window)
    domain = cfg.domain()
    tables = evaluate_nodal_grid(domain, cfg.grid_shape, problem, progress, cfg.workers)
    surface = fit_spline(tables)
    candidates = find_critical_points(surface, tables.X, domain)
    report = classify_and_boundary(candidates, surface, tables.X, domain)

    xi = np.linalg.pinv(tables.X, hermitian=True)
    aa, tt = np.meshgrid(tables.alphas, tables.thetas, indexing="ij")
    lam0, lam1 = domain.to_lambda(aa, tt)
    g_nodes = tables.z - np.einsum("abi,ij,abj->ab", tables.y, xi, tables.y)
    w_nodes = tables.y @ xi.T
    surf = {"alpha": aa.ravel(), "theta": tt.ravel(), "lambda0": lam0.ravel(), "lambda1": lam1.ravel()}
    for i, n in enumerate(names):
        surf[f"y_{n}"] = tables.y[:, :, i].ravel()
    surf["z"] = tables.z.ravel()
    surf["projected_loss"] = g_nodes.ravel()
    for i, n in enumerate(names):
        surf[f"w_{n}"] = w_nodes[:, :, i].ravel()
    surf["v0"] = tables.v0.ravel()

    ag = np.linspace(tables.alphas[0], tables.alphas[-1], gradient_samples)
    tg = np.linspace(tables.thetas[0], tables.thetas[-1], gradient_samples)
    ga_, tg_ = np.meshgrid(ag, tg, indexing="ij")
    grad = surface.gradient(ga_, tg_)
    field = {"alpha": ga_.ravel(), "theta": tg_.ravel(),
             "projected_loss": surface.projected_loss(ga_, tg_).ravel(),
             "dg_dalpha": grad[0].ravel(), "dg_dtheta": grad[1].ravel()}

    sol = {k: [] for k in ("kind", "edge", "alpha", "theta", "lambda0", "lambda1")}
    sol.update({f"w_{n}": [] for n in names})
    sol.update({k: [] for k in ("loss", "eig_min", "eig_max", "classification", "compass_max_change")})
    for c in report.critical_points:
        eig = c.hessian_eigenvalues if c.hessian_eigenvalues is not None else [np.nan, np.nan]
        compass = compass_check(surface, domain, c)
        worst = float(np.nanmax(compass)) if np.any(np.isfinite(compass)) else float("nan")
        values = ("interior", "", c.alpha, c.theta, c.lambda0, c.lambda1, *c.allocation, c.loss,
                  float(np.min(eig)), float(np.max(eig)), c.classification, worst)
        for k, v in zip(sol, values):
            sol[k].append(v)
    for b in report.boundary_solutions:
        values = ("boundary", b.edge, b.alpha, b.theta, b.lambda0, b.lambda1, *b.allocation, b.loss,
                  float("nan"), float("nan"), "boundary", float("nan"))
        for k, v in zip(sol, values):
            sol[k].append(v)

    starts = [(a, t) for a in np.linspace(tables.alphas[0], tables.alphas[-1], 3)
              for t in np.linspace(tables.thetas[0], tables.thetas[-1], 3)]
    traj = {k: [] for k in ("trajectory", "step", "alpha", "theta", "projected_loss")}
    for i, path in enumerate(ascent_trajectories(surface, starts)):
        for j, (a, t) in enumerate(path):
            for k, v in zip(traj, (i, j, a, t, float(surface.projected_loss(a, t)))):
                traj[k].append(v)

    geo = build_domain(domain)
    diag = {"quantity": ["spline_residual", "domain_diameter", "n_interior_saddles", "n_boundary"],
            "value": [surface.residual, geo.diameter, float(len(report.saddles)),
                      float(len(report.boundary_solutions))]}
    if report.saddles:
        semi = semi_robustness(surface, report.saddles[0].alpha)
        diag["quantity"] += ["max_abs_dalpha_on_curve", "p10_abs_dtheta"]
        diag["value"] += [semi["max_abs_dalpha_on_curve"], semi["p10_abs_dtheta"]]
    return {"robust_surface": surf, "robust_gradient": field, "robust_solutions": sol,
            "robust_trajectories": traj, "robust_diagnostics": diag}


def _robust(cfg: RunConfig) -> dict:
    return robust_tables(cfg, lambda i, j: log.info("robust node (%d, %d)", i, j))


@dataclass(frozen=True)
class Preset:
    template: dict
    run: object
    summary: str


PRESETS = {
    "fig4a": Preset({"simulation": {"seed": 1, "paths": 50000}}, _fig4a,
                    "EPO value against eta_b per amortization and incentive function"),
    "fig4b": Preset({"simulation": {"seed": 1, "paths": 50000}, "sigmoid": EMPIRICAL_SIGMOID}, _fig4b,
                    "EPO value against eta_b per market price of risk"),
    "table4": Preset({"simulation": {"seed": 7, "paths": 100000}}, _table4,
                     "mean-squared hedge allocations and losses per instrument subset"),
    "table5": Preset({"simulation": {"seed": 7, "paths": 100000}}, _table5,
                     "hedges with an expected-shortfall term for k = 0, 10, 20"),
    "fig5": Preset({"simulation": {"seed": 7, "paths": 100000}}, _fig5,
                   "integrated distance histograms for single-instrument hedges"),
    "fig6": Preset({"simulation": {"seed": 7, "paths": 100000}}, _fig6,
                   "integrated distance histograms for combined and shortfall hedges"),
    "robust": Preset({"simulation": {"seed": 7, "paths": 20000}, "roster": ["swap"]}, _robust,
                     "min-max hedge over the market price of risk"),
}


def preset_config(name: str, overrides: dict | None = None) -> RunConfig:
    """Preset template with ``overrides`` (same nested layout as a config file) applied on top."""
    if name not in PRESETS:
        raise KeyError(f"unknown experiment {name!r}; choose from {sorted(PRESETS)}")
    merged = RunConfig.from_dict(PRESETS[name].template).data
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    merged["experiment"] = name
    return RunConfig.from_dict(merged)


def write_tables(tables: dict, cfg: RunConfig, out_dir) -> list:
    os.makedirs(out_dir, exist_ok=True)
    provenance = {"config_sha256": cfg.sha256, "seed": cfg.seed}
    if cfg.data["experiment"]:
        provenance["experiment"] = cfg.data["experiment"]
    written = []
    for name, columns in tables.items():
        path = os.path.join(out_dir, f"{name}.csv")
        emit_csv(columns, path, provenance)
        written.append(path)
    return written


def run_experiment(name: str, out_dir, overrides: dict | None = None) -> list:
    """Run preset ``name`` and write its CSVs into ``out_dir``; returns the file paths."""
    cfg = preset_config(name, overrides)
    return write_tables(PRESETS[name].run(cfg), cfg, out_dir)
