"""Run configuration: a nested JSON document validated into model objects.

Every section has a fixed set of keys; unknown keys are rejected and every
diagnostic names the offending dotted key.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass

from .hedge import LossConfig
from .instruments import InstrumentSpec
from .market import YieldCurve, fit_theta
from .paths import MarketPriceOfRisk, OUParams, girsanov_map, make_grid
from .prepay import MortgageSpec, SigmoidParams
from .pricer import LsmConfig, RegressionBasis
from .robust import MprDomain

INSTRUMENT_NAMES = ("swap", "receiver_swaption", "payer_swaption")

DEFAULTS = {
    "curve": {"flat": 0.03, "tenors": None, "rates": None},
    "hull_white": {"alpha": 0.023, "sigma": 0.006},
    "behaviour": {"alpha": 2.099, "theta": -0.002, "eta": 0.015, "b0": 0.0},
    "correlation": 0.44,
    "mpr": {"lambda0": 0.0, "lambda1": 0.0},
    "sigmoid": {"kind": "tanh", "l": 0.0231, "u": 0.0447, "a": 84.0},
    "mortgage": {"notional0": 1e4, "fixed_rate": 0.031, "years": 10, "amortization": "bullet"},
    "prepayment_mode": "continuous",
    "lsm": {"degree": 2, "ridge": 1e-10},
    "instruments": {"strike": 0.03, "swap_end": 10.0, "swaption_expiry": 9.0, "swaption_end": 10.0,
                    "settlement": "physical"},
    "roster": list(INSTRUMENT_NAMES),
    "loss": {"p": 2.0, "q": 0.9, "k": 0.0, "window": None},
    "robust": {"alpha_range": [0.1, 10.0], "theta_range": [-0.03, 0.03], "grid": [12, 12]},
    "simulation": {"seed": 7, "paths": 100000, "steps_per_year": 12, "workers": 1},
    "experiment": None,
}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _merge(defaults, given, prefix=""):
    if not isinstance(given, dict):
        raise ConfigError(prefix or "<root>", "expected an object")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in defaults:
            raise ConfigError(path, "unknown key")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value, path)
        else:
            out[key] = value
    return out


def _number(data, key, lo=None, hi=None, strict_lo=False, integer=False):
    section, _, name = key.rpartition(".")
    node = data
    for part in section.split(".") if section else []:
        node = node[part]
    value = node[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if lo is not None and (value <= lo if strict_lo else value < lo):
        raise ConfigError(key, f"must be {'>' if strict_lo else '>='} {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(key, f"must be <= {hi}, got {value}")
    return int(value) if integer else float(value)


def _pair(data, key, integer=False):
    section, name = key.split(".")
    value = data[section][name]
    if not isinstance(value, (list, tuple)) or len(value) != 2 or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise ConfigError(key, f"expected two numbers, got {value!r}")
    if integer and any(int(v) != v for v in value):
        raise ConfigError(key, f"expected two integers, got {value!r}")
    return tuple(int(v) if integer else float(v) for v in value)


def _choice(value, key, options):
    if value not in options:
        raise ConfigError(key, f"must be one of {options}, got {value!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; ``data`` is the full resolved document."""

    data: dict

    @classmethod
    def from_dict(cls, given: dict | None = None) -> "RunConfig":
        cfg = cls(_merge(DEFAULTS, given or {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                given = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        return cls.from_dict(given)

    def replace(self, **sections) -> "RunConfig":
        """Copy with top-level sections merged in (nested dicts update key by key)."""
        given = copy.deepcopy(self.data)
        for key, value in sections.items():
            if key not in DEFAULTS:
                raise ConfigError(key, "unknown key")
            if isinstance(DEFAULTS[key], dict) and isinstance(value, dict):
                given[key] = {**given[key], **value}
            else:
                given[key] = value
        return RunConfig.from_dict(given)

    def canonical(self) -> str:
        """Sorted-key JSON of the settings that determine results (the thread count does not)."""
        data = copy.deepcopy(self.data)
        data["simulation"].pop("workers", None)
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def validate(self):
        d = self.data
        curve = d["curve"]
        if curve["tenors"] is None:
            _number(d, "curve.flat")
        else:
            tenors, rates = curve["tenors"], curve["rates"]
            if not isinstance(tenors, list) or not isinstance(rates, list) or len(tenors) != len(rates):
                raise ConfigError("curve.rates", "tenors and rates must be lists of equal length")
        _number(d, "hull_white.alpha", 0.0, strict_lo=True)
        _number(d, "hull_white.sigma", 0.0)
        _number(d, "behaviour.alpha", 0.0, strict_lo=True)
        _number(d, "behaviour.theta")
        _number(d, "behaviour.eta", 0.0)
        _number(d, "behaviour.b0")
        _number(d, "correlation", -1.0, 1.0)
        _number(d, "mpr.lambda0")
        _number(d, "mpr.lambda1")
        _choice(d["sigmoid"]["kind"], "sigmoid.kind", ("tanh", "rational"))
        _number(d, "sigmoid.l", 0.0)
        _number(d, "sigmoid.u", 0.0)
        _number(d, "sigmoid.a", 0.0)
        if d["sigmoid"]["l"] > d["sigmoid"]["u"]:
            raise ConfigError("sigmoid.l", "must not exceed sigmoid.u")
        _number(d, "mortgage.notional0", 0.0, strict_lo=True)
        _number(d, "mortgage.fixed_rate")
        _number(d, "mortgage.years", 1, integer=True)
        _choice(d["mortgage"]["amortization"], "mortgage.amortization", ("bullet", "linear"))
        _choice(d["prepayment_mode"], "prepayment_mode", ("continuous", "reset"))
        _number(d, "lsm.degree", 0, integer=True)
        _number(d, "lsm.ridge", 0.0)
        for key in ("strike", "swap_end", "swaption_expiry", "swaption_end"):
            _number(d, f"instruments.{key}")
        _choice(d["instruments"]["settlement"], "instruments.settlement", ("physical", "cash"))
        roster = d["roster"]
        if not isinstance(roster, list) or not roster:
            raise ConfigError("roster", "expected a non-empty list of instrument names")
        for i, name in enumerate(roster):
            _choice(name, f"roster[{i}]", INSTRUMENT_NAMES)
        if len(set(roster)) != len(roster):
            raise ConfigError("roster", "instrument names must be distinct")
        _number(d, "loss.p", 1.0)
        q = _number(d, "loss.q", 0.0, 1.0, strict_lo=True)
        if q >= 1.0:
            raise ConfigError("loss.q", "must be < 1")
        _number(d, "loss.k", 0.0)
        if d["loss"]["window"] is not None:
            _pair(d, "loss.window")
        a_lo, a_hi = _pair(d, "robust.alpha_range")
        if not 0.0 < a_lo < a_hi:
            raise ConfigError("robust.alpha_range", "need 0 < alpha_min < alpha_max")
        t_lo, t_hi = _pair(d, "robust.theta_range")
        if t_lo >= t_hi:
            raise ConfigError("robust.theta_range", "need theta_min < theta_max")
        shape = _pair(d, "robust.grid", integer=True)
        if min(shape) < 4:
            raise ConfigError("robust.grid", "need at least 4 nodes per axis")
        _number(d, "simulation.seed", 0, integer=True)
        _number(d, "simulation.paths", 2, integer=True)
        _number(d, "simulation.steps_per_year", 1, integer=True)
        _number(d, "simulation.workers", 1, integer=True)
        # build everything once so module-level invariants are checked too
        builders = [("curve", self.curve), ("hull_white", self.hull_white), ("behaviour", self.ou_p),
                    ("mpr", self.ou_q), ("sigmoid", self.sigmoid), ("mortgage", self.mortgage),
                    ("instruments", self.roster), ("simulation", self.grid)]
        if d["behaviour"]["eta"] > 0.0:  # the robust domain is undefined without behavioural noise
            builders.append(("robust", self.domain))
        for name, build in builders:
            try:
                build()
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(name, str(exc)) from None

    # builders
    def curve(self) -> YieldCurve:
        c = self.data["curve"]
        if c["tenors"] is None:
            return YieldCurve.flat(float(c["flat"]))
        return YieldCurve(tuple(map(float, c["tenors"])), tuple(map(float, c["rates"])))

    def hull_white(self):
        h = self.data["hull_white"]
        return fit_theta(self.curve(), float(h["alpha"]), float(h["sigma"]))

    def ou_p(self) -> OUParams:
        b = self.data["behaviour"]
        return OUParams(float(b["alpha"]), float(b["theta"]), float(b["eta"]), float(b["b0"]))

    def mpr(self) -> MarketPriceOfRisk:
        return MarketPriceOfRisk(float(self.data["mpr"]["lambda0"]), float(self.data["mpr"]["lambda1"]))

    def ou_q(self) -> OUParams:
        return girsanov_map(self.ou_p(), self.mpr())

    def sigmoid(self) -> SigmoidParams:
        s = self.data["sigmoid"]
        rational = s["kind"] == "rational"
        return SigmoidParams(float(s["l"]), float(s["u"]), 0.0 if rational else float(s["a"]), rational)

    def mortgage(self) -> MortgageSpec:
        m = self.data["mortgage"]
        return MortgageSpec.annual(float(m["notional0"]), float(m["fixed_rate"]), int(m["years"]),
                                   m["amortization"])

    def lsm(self) -> LsmConfig:
        return LsmConfig(RegressionBasis(int(self.data["lsm"]["degree"])), float(self.data["lsm"]["ridge"]))

    def instrument(self, name: str) -> InstrumentSpec:
        i = self.data["instruments"]
        if name == "swap":
            return InstrumentSpec.swap("receiver_swap", i["strike"], 0.0, i["swap_end"])
        kind = "receiver_swaption" if name == "receiver_swaption" else "payer_swaption"
        return InstrumentSpec.swaption(kind, i["strike"], i["swaption_expiry"], i["swaption_end"],
                                       settlement=i["settlement"])

    def roster(self, names=None) -> tuple:
        return tuple(self.instrument(n) for n in (self.data["roster"] if names is None else names))

    def loss(self) -> LossConfig:
        lc = self.data["loss"]
        window = None if lc["window"] is None else tuple(map(float, lc["window"]))
        return LossConfig(float(lc["p"]), float(lc["q"]), float(lc["k"]), None, window)

    def domain(self) -> MprDomain:
        r = self.data["robust"]
        return MprDomain(tuple(r["alpha_range"]), tuple(r["theta_range"]), self.ou_p())

    @property
    def grid_shape(self) -> tuple:
        return tuple(int(v) for v in self.data["robust"]["grid"])

    @property
    def seed(self) -> int:
        return int(self.data["simulation"]["seed"])

    @property
    def n_paths(self) -> int:
        return int(self.data["simulation"]["paths"])

    @property
    def workers(self) -> int:
        return int(self.data["simulation"]["workers"])

    def grid(self):
        spec = self.mortgage()
        i = self.data["instruments"]
        horizon = max(spec.maturity, float(i["swap_end"]), float(i["swaption_end"]))
        extra = (float(i["swap_end"]), float(i["swaption_expiry"]), float(i["swaption_end"]))
        extra += tuple(float(x) for x in self.data["loss"]["window"] or ())
        return make_grid(0.0, horizon, int(self.data["simulation"]["steps_per_year"]),
                         spec.reset_dates, spec.payment_dates, extra)
