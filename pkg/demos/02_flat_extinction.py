# # Extinction time of flat data
#
# For u0 = 1 the diffusion term does nothing and the solution follows
# u' = -u^q, which dies at t = 1/(1-q) = 4 for q = 3/4. Backward Euler
# overshoots that time by an amount proportional to the step, so halving the
# step should halve the error and one Richardson step should remove it.

# In[1]:

from fdextinct import SolverConfig, estimate_extinction, make_uniform_grid, run, validate_params

params = validate_params(1, 0.5, 0.75)
# a wide domain keeps the zero boundary value from reaching the centre
grid = make_uniform_grid(params, 160.0, 512)
flat = lambda r: 1.0 + 0.0 * r

# In[2]:

cfg = SolverConfig(dt_init=1e-2, dt_max=1e-2, dt_rel=1e-2, snapshot_stride=100)
previous = None
for level in range(4):
    traj = run(flat, grid, params, cfg)
    err = traj.T_e_est - 4.0
    ratio = "" if previous is None else f"  error ratio {previous / err:.3f}"
    print(f"dt_max={cfg.dt_max:.2e}  T_e={traj.T_e_est:.6f}  error={err:.2e}{ratio}")
    previous = err
    cfg = cfg.refined(0.5)

# In[3]:

coarse = run(flat, grid, params, SolverConfig(dt_init=1e-2, dt_max=1e-2, dt_rel=1e-2))
print("Richardson estimate:", estimate_extinction(coarse, richardson=True))
