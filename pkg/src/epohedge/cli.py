"""Command-line harness: ``epohedge <subcommand> [options]``.

Exit status: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import experiments as ex
from .config import INSTRUMENT_NAMES, ConfigError, RunConfig
from .hedge import integrated_distance, loss, signed_distance
from .market import zcb_price

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4

log = logging.getLogger("epohedge")


def _floats(text, count, name):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(name, f"expected {count} comma-separated numbers, got {text!r}") from None
    if len(values) != count:
        raise ConfigError(name, f"expected {count} comma-separated numbers, got {text!r}")
    return values


def _roster(text):
    names = [n.strip() for n in text.split(",") if n.strip()]
    for n in names:
        if n not in INSTRUMENT_NAMES:
            raise ConfigError("roster", f"unknown instrument {n!r}; choose from {INSTRUMENT_NAMES}")
    return names


def _read_config(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected an object")
    return data


def _overrides(args) -> dict:
    """Config-file content with global and subcommand flags layered on top."""
    given = _read_config(args.config)
    sim = dict(given.get("simulation", {}))
    for flag, key in (("seed", "seed"), ("paths", "paths"), ("steps_per_year", "steps_per_year"),
                      ("workers", "workers")):
        if getattr(args, flag) is not None:
            sim[key] = getattr(args, flag)
    if sim:
        given["simulation"] = sim
    if getattr(args, "roster", None):
        given["roster"] = _roster(args.roster)
    loss_flags = {k: getattr(args, k, None) for k in ("p", "q", "k")}
    if getattr(args, "window", None):
        loss_flags["window"] = _floats(args.window, 2, "loss.window")
    loss_flags = {k: v for k, v in loss_flags.items() if v is not None}
    if loss_flags:
        given["loss"] = {**given.get("loss", {}), **loss_flags}
    robust = {}
    if getattr(args, "alpha_range", None):
        robust["alpha_range"] = _floats(args.alpha_range, 2, "robust.alpha_range")
    if getattr(args, "theta_range", None):
        robust["theta_range"] = _floats(args.theta_range, 2, "robust.theta_range")
    if getattr(args, "grid", None):
        robust["grid"] = [int(v) for v in _floats(args.grid, 2, "robust.grid")]
    if robust:
        given["robust"] = {**given.get("robust", {}), **robust}
    return given


def cmd_simulate(cfg: RunConfig) -> dict:
    """Node-wise summary of the simulated factors and a zero-bond martingale check."""
    paths = ex.simulate(cfg)
    times = paths.times
    discount = 1.0 / paths.money_account
    model = np.array([float(zcb_price(0.0, t, paths.r[0, 0], cfg.hull_white())) for t in times])
    return {"simulate": {
        "time": times, "r_mean": paths.r.mean(axis=0), "r_std": paths.r.std(axis=0),
        "b_mean": paths.b.mean(axis=0), "b_std": paths.b.std(axis=0),
        "discount_mc": discount.mean(axis=0),
        "discount_stderr": discount.std(axis=0, ddof=1) / np.sqrt(paths.n_paths),
        "discount_model": model}}


def cmd_price(cfg: RunConfig, with_values: bool = False) -> dict:
    res, notionals, paths = ex.price(cfg, keep_values=True)
    summary = {"v0": [res.value], "v0_bps": [res.bps], "stderr_bps": [res.stderr_bps],
               "direct_bps": [1e4 * res.direct / res.notional0], "paths": [paths.n_paths]}
    profile = {"time": paths.times, "value_mean": res.values.mean(axis=0),
               "prepaid_mean": notionals.prepayment.mean(axis=0),
               "prepayment_rate_mean": notionals.rate.mean(axis=0)}
    out = {"epo_price": summary, "epo_profile": profile}
    if with_values:
        n_paths, n_nodes = res.values.shape
        out["epo_values"] = {"path": np.repeat(np.arange(n_paths), n_nodes),
                             "time": np.tile(paths.times, n_paths), "value": res.values.ravel()}
    return out


def cmd_hedge(cfg: RunConfig) -> dict:
    names = tuple(cfg.data["roster"])
    inputs = ex.hedge_inputs(cfg, names)
    lc = cfg.loss()
    sol = ex.optimal_hedge(inputs, names, lc)
    d = signed_distance(inputs.epo, inputs.wealths(names), sol.allocations)
    parts = loss(d, inputs.times, lc)
    base = loss(inputs.epo.wealth, inputs.times, lc)
    cost = float(np.dot(sol.allocations, [inputs.values0[n] for n in names]))
    alloc = {"instrument": list(names), "allocation": sol.allocations,
             "value_t0": [inputs.values0[n] for n in names]}
    summary = {"quantity": ["loss_total", "loss_moment", "loss_shortfall", "no_hedge_total",
                            "relative_loss_pct", "initial_cost", "gradient_norm", "epo_v0_bps"],
               "value": [parts.total, parts.moment, parts.shortfall, base.total,
                         100.0 * parts.total / base.total, cost, sol.gradient_norm, inputs.epo_price.bps]}
    sample = integrated_distance(d, inputs.times, lc.window)
    distance = {"path": np.arange(sample.size), "integrated_distance": sample}
    return {"hedge_allocations": alloc, "hedge_summary": summary, "hedge_distance": distance}


def cmd_robust(cfg: RunConfig) -> dict:
    return ex.robust_tables(cfg, lambda i, j: log.debug("robust node (%d, %d)", i, j))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epohedge", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--paths", type=int, help="number of Monte Carlo paths")
    parser.add_argument("--steps-per-year", type=int)
    parser.add_argument("--workers", type=int, help="threads for path simulation and nodal grids")
    parser.add_argument("--out-dir", default=".", help="directory for the CSV outputs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="simulate factor paths and summarize them")
    pe = sub.add_parser("price-epo", help="price the prepayment option")
    pe.add_argument("--values", action="store_true", help="also write the value on every path and node")
    h = sub.add_parser("hedge", help="optimal static hedge for a loss function")
    h.add_argument("--roster", help=f"comma-separated subset of {','.join(INSTRUMENT_NAMES)}")
    h.add_argument("--p", type=float, help="moment order")
    h.add_argument("--q", type=float, help="expected-shortfall level")
    h.add_argument("--k", type=float, help="expected-shortfall weight")
    h.add_argument("--window", help="monitoring window 'start,end'")
    r = sub.add_parser("robust", help="min-max hedge over the market price of risk")
    r.add_argument("--alpha-range", help="'min,max' of the risk-neutral mean-reversion speed")
    r.add_argument("--theta-range", help="'min,max' of the risk-neutral mean level")
    r.add_argument("--grid", help="node counts 'n_alpha,n_theta'")
    r.add_argument("--roster", help=f"comma-separated subset of {','.join(INSTRUMENT_NAMES)}")
    e = sub.add_parser("experiment", help="run a preset")
    e.add_argument("id", choices=sorted(ex.PRESETS))
    return parser


COMMANDS = {"simulate": cmd_simulate, "price-epo": cmd_price, "hedge": cmd_hedge, "robust": cmd_robust}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        overrides = _overrides(args)
        if args.command == "experiment":
            cfg = ex.preset_config(args.id, overrides)
            tables = ex.PRESETS[args.id].run(cfg)
        else:
            if args.command == "robust" and "roster" not in overrides:
                overrides["roster"] = ["swap"]
            cfg = RunConfig.from_dict(overrides)
            if args.command == "price-epo":
                tables = cmd_price(cfg, args.values)
            else:
                tables = COMMANDS[args.command](cfg)
        for path in ex.write_tables(tables, cfg, args.out_dir):
            log.info("wrote %s", path)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (ex.NumericalError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:  # invalid model inputs that passed the schema checks
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
