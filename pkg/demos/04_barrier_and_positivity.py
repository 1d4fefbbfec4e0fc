# # Two qualitative properties
#
# A profile below kappa |x|^(-2/(q-m)) stays below max(kappa, kappa_*) times
# the same power for all time. Independently, data with compact support
# become positive everywhere after any positive time, even when q = m.

# In[1]:

import numpy as np

from fdextinct import SolverConfig, make_uniform_grid, run, validate_params
from fdextinct.diagnostics import barrier_spec, check_barrier, check_positivity

# In[2]:

for N, m, q in ((1, 0.5, 0.75), (3, 0.4, 0.8)):
    params = validate_params(N, m, q)
    decay = 2 / (q - m)
    grid = make_uniform_grid(params, 20.0, 512)
    traj = run(lambda r: np.maximum(r, 1.0) ** -decay, grid, params,
               SolverConfig(snapshot_stride=5))
    rep = check_barrier(traj, barrier_spec(params, 1.0))
    print(f"N={N} m={m} q={q}: barrier {'holds' if rep.passed else 'violated'}, "
          f"worst relative margin {rep.worst_margin:.3f} over {len(traj.snapshots)} snapshots")

# In[3]:

for q in (0.75, 0.5):
    params = validate_params(2, 0.5, q, regime="positivity")
    grid = make_uniform_grid(params, 10.0, 256)
    traj = run(lambda r: (r <= 1.0).astype(float), grid, params, SolverConfig(snapshot_stride=1))
    first = traj.snapshots[1]
    rep = check_positivity(traj)
    print(f"q={q}: after t={first.t:.1e} the smallest interior value is {first.values[:-1].min():.3e};"
          f" positivity {'holds' if rep.passed else 'fails'} up to extinction")
