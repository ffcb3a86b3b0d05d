"""
Static hedging with swaps and swaptions
=======================================

Mean-squared hedges for every subset of the instrument roster, then the
effect of adding an expected-shortfall penalty.
"""

# %%
import numpy as np

from epohedge import loss
from epohedge import experiments as ex
from epohedge.hedge import LossConfig

cfg = ex.preset_config("table4", {"simulation": {"paths": 20000}})
inputs = ex.hedge_inputs(cfg)
lc = LossConfig()
no_hedge = loss(inputs.epo.wealth, inputs.times, lc).moment
print(f"EPO value {inputs.epo_price.bps:.2f} bps, unhedged loss {no_hedge:.0f}")

# %%
for s, names in ex.STRATEGIES.items():
    sol = ex.optimal_hedge(inputs, names, lc)
    alloc = ", ".join(f"{n}={w:.0f}" for n, w in zip(names, sol.allocations))
    print(f"strategy {s}: {alloc:55s} loss {100 * sol.loss_value / no_hedge:5.2f}%")

# %%
# A tail penalty trades mean-squared loss for a smaller expected shortfall.
for k, w, parts in ex._es_solutions(cfg, inputs):
    print(f"k = {k:4.0f}: w = {np.round(w, 0)}, M2 = {parts.moment:.0f}, ES = {parts.shortfall:.1f}")
