"""
Robust hedging over the market price of risk
=============================================

Evaluate the loss coefficients on an (alpha, theta) node grid, interpolate
the projected loss and search it for saddle and boundary solutions.  A
coarse grid and few paths keep the run short; the ``robust`` preset uses
12 x 12 nodes.
"""

# %%
import numpy as np

from epohedge import experiments as ex

cfg = ex.preset_config("robust", {"simulation": {"paths": 5000}, "robust": {"grid": [6, 6]}})
tables = ex.robust_tables(cfg)

# %%
surf = tables["robust_surface"]
g = np.array(surf["projected_loss"]).reshape(cfg.grid_shape)
print("projected loss on the nodes (rows: alpha, columns: theta)")
print(np.array2string(g, precision=0, max_line_width=120))

# %%
sol = tables["robust_solutions"]
for i in range(len(sol["kind"])):
    print(f"{sol['kind'][i]:9s} {sol['edge'][i]:10s} alpha={sol['alpha'][i]:6.3f} theta={sol['theta'][i]:+.4f} "
          f"w_swap={sol['w_swap'][i]:8.1f} loss={sol['loss'][i]:9.1f} {sol['classification'][i]}")

# %%
diag = dict(zip(tables["robust_diagnostics"]["quantity"], tables["robust_diagnostics"]["value"]))
print(diag)
