# # Ordered data stay ordered
#
# The backward Euler step is monotone, so two runs with u0 <= v0 and the same
# step sequence keep u <= v at every node.

# In[1]:

import numpy as np

from fdextinct import SolverConfig, make_uniform_grid, run, validate_params
from fdextinct.diagnostics import check_comparison

params = validate_params(1, 0.5, 0.75)
grid = make_uniform_grid(params, 20.0, 1024)
cfg = SolverConfig(dt_init=2e-3, dt_max=2e-3, adaptive=False, snapshot_stride=5)

lower = run(lambda r: np.maximum(r, 1.0) ** -8.0, grid, params, cfg)
upper = run(lambda r: np.ones_like(r), grid, params, cfg)

# In[2]:

rep = check_comparison(lower, upper)
print(rep.note)
print("ordered" if rep.passed else "ordering violated", "- smallest gap", rep.worst_margin)
print(f"extinction times: {lower.T_e_est:.4f} <= {upper.T_e_est:.4f}")
