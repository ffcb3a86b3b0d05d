"""Pricing and static hedging of the mortgage prepayment option under a two-factor model."""
from .market import YieldCurve, HullWhiteParams, fit_theta, zcb_price, forward_rate, zcb_option_price
from .paths import (TimeGrid, make_grid, OUParams, MarketPriceOfRisk, PathSet, girsanov_map,
                    market_price_of_risk, simulate_paths, with_behaviour, trapezoid)
from .prepay import (MortgageSpec, SigmoidParams, NotionalPaths, contractual_notional,
                     swap_rate_annuity, incentive_swap_rate, prepayment_rate, notional_paths,
                     epo_cashflow, epo_cashflows)
from .pricer import LsmConfig, RegressionBasis, EpoPrice, price_epo, price_epo_at_zero
from .instruments import InstrumentSpec, WealthPath, instrument_wealth, epo_wealth
from .hedge import (LossConfig, HedgeSolution, signed_distance, expected_shortfall, loss,
                    quadratic_coefficients, solve_quadratic, solve_general)
from .robust import (MprDomain, build_domain, NodalProblem, evaluate_nodal_grid, fit_spline,
                     find_critical_points, classify_and_boundary, SaddleReport)
from .config import RunConfig, ConfigError

__version__ = "0.1.0"

__all__ = [
    "YieldCurve", "HullWhiteParams", "fit_theta", "zcb_price", "forward_rate", "zcb_option_price",
    "TimeGrid", "make_grid", "OUParams", "MarketPriceOfRisk", "PathSet", "girsanov_map",
    "market_price_of_risk", "simulate_paths", "with_behaviour", "trapezoid",
    "MortgageSpec", "SigmoidParams", "NotionalPaths", "contractual_notional", "swap_rate_annuity",
    "incentive_swap_rate", "prepayment_rate", "notional_paths", "epo_cashflow", "epo_cashflows",
    "LsmConfig", "RegressionBasis", "EpoPrice", "price_epo", "price_epo_at_zero",
    "InstrumentSpec", "WealthPath", "instrument_wealth", "epo_wealth",
    "LossConfig", "HedgeSolution", "signed_distance", "expected_shortfall", "loss",
    "quadratic_coefficients", "solve_quadratic", "solve_general",
    "MprDomain", "build_domain", "NodalProblem", "evaluate_nodal_grid", "fit_spline",
    "find_critical_points", "classify_and_boundary", "SaddleReport",
    "RunConfig", "ConfigError",
]
