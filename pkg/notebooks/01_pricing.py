"""
Pricing the prepayment option
=============================

Simulate the short rate and the behavioural factor, turn them into a
prepayment notional and value the option by least-squares Monte Carlo.
Run with ``python notebooks/01_pricing.py``.
"""

# %%
import numpy as np

from epohedge import RunConfig, zcb_price
from epohedge import experiments as ex

cfg = RunConfig.from_dict({"simulation": {"seed": 1, "paths": 20000}})
hw = cfg.hull_white()
print("10y discount factor", zcb_price(0.0, 10.0, hw.r0, hw))

# %%
# Factor paths share one set of Gaussian shocks; the discount factor is a martingale check.
paths = ex.simulate(cfg)
k5 = paths.grid.index(5.0)
disc = 1.0 / paths.money_account[:, k5]
print(f"E[1/M(5)] = {disc.mean():.6f} +- {disc.std(ddof=1) / np.sqrt(disc.size):.6f}, "
      f"model {zcb_price(0.0, 5.0, hw.r0, hw):.6f}")

# %%
# Value at t0 and its dependence on the behavioural volatility.
for eta in ex.ETA_SWEEP:
    res, notionals, _ = ex.price(cfg.replace(behaviour={"eta": eta}))
    prepaid = notionals.prepayment[:, -2].mean()
    print(f"eta = {eta:.3f}: V0 = {res.bps:6.2f} bps (se {res.stderr_bps:.2f}), mean prepaid by t=10: {prepaid:7.1f}")

# %%
# Switching the incentive function to the rational (threshold) form.
rational = cfg.replace(sigmoid=ex.RATIONAL_SIGMOID)
print("rational incentive:", round(ex.price(rational)[0].bps, 2), "bps")
