import numpy as np
import pytest
from scipy.optimize import brentq

from fdextinct.diagnostics import check_comparison, check_positivity
from fdextinct.exponents import validate_params
from fdextinct.grid import State, make_uniform_grid
from fdextinct.solver import (BARRIER_CLAMP, NotExtinguished, SolverConfig, StepTooSmall,
                              Trajectory, apply_laplacian, estimate_extinction, run, step,
                              step_with_info)

from conftest import capped, flat, indicator

COARSE = SolverConfig(dt_init=1e-2, dt_max=1e-2, dt_rel=1e-2, snapshot_stride=50)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(dt_init=1.0, dt_max=0.1)
    with pytest.raises(ValueError):
        SolverConfig(boundary="neumann")
    fine = COARSE.refined(0.5)
    assert fine.dt_max == 5e-3 and fine.dt_rel == 5e-3 and fine.snapshot_stride == 100


def test_flat_step_matches_scalar_root(p_ref):
    # implicit step of the ODE z' = -z^q from z=1: z + dt z^q = 1
    g = make_uniform_grid(p_ref, 20.0, 256)
    s = step(State(0.0, np.ones(257)), g, p_ref, SolverConfig(), 0.1)
    z = brentq(lambda z: z + 0.1 * z ** 0.75 - 1.0, 0.0, 1.0, xtol=1e-15)
    assert z == pytest.approx(0.9070551620758933, rel=1e-12)
    assert s.values[0] == pytest.approx(z, rel=1e-10)
    assert s.t == 0.1
    assert s.values[-1] == 0.0


def test_zero_state_stays_zero(p_ref):
    g = make_uniform_grid(p_ref, 5.0, 64)
    s, info = step_with_info(State(0.0, np.zeros(65)), g, p_ref, SolverConfig(), 1e-3)
    assert not s.values.any() and info.iters == 0


def test_step_too_small(p_ref):
    g = make_uniform_grid(p_ref, 5.0, 64)
    with pytest.raises(StepTooSmall):
        step(State(0.0, np.ones(65)), g, p_ref, SolverConfig(), 1e-13)


def test_laplacian_of_quadratic_is_exact_inside():
    # Delta |x|^2 = 2N; the conservative stencil reproduces it away from the boundary
    for N in (1, 2, 3):
        g = make_uniform_grid(N, 1.0, 64)
        lap = apply_laplacian(g.nodes ** 2, g)
        np.testing.assert_allclose(lap[:-1], 2 * N, rtol=1e-10)


def test_step_is_first_order_consistent():
    p = validate_params(3, 0.6, 0.8)
    g = make_uniform_grid(p, 6.0, 32)  # coarse so that dt * stiffness stays small
    u0 = np.exp(-g.nodes ** 2) + 0.5
    u0[-1] = 0.5
    drift = apply_laplacian(u0 ** p.m, g) - u0[:-1] ** p.q
    errs = []
    for dt in (1e-3, 5e-4, 2.5e-4):
        u1 = step(State(0.0, u0), g, p, SolverConfig(), dt, u_b=0.5).values
        errs.append(np.max(np.abs((u1 - u0)[:-1] / dt - drift)))
    assert errs[0] / errs[1] == pytest.approx(2, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(2, rel=0.1)


def test_flat_extinction_time_converges_at_first_order(p_ref):
    g = make_uniform_grid(p_ref, 160.0, 512)
    Ts = []
    cfg = COARSE
    for _ in range(3):
        Ts.append(run(flat, g, p_ref, cfg).T_e_est)
        cfg = cfg.refined(0.5)
    ratio = (Ts[0] - Ts[1]) / (Ts[1] - Ts[2])
    assert ratio == pytest.approx(2, rel=0.05)
    assert abs(2 * Ts[2] - Ts[1] - 4.0) < 1e-3


def test_richardson_estimate(p_ref):
    g = make_uniform_grid(p_ref, 160.0, 512)
    traj = run(flat, g, p_ref, COARSE)
    assert abs(traj.T_e_est - 4.0) > 1e-3
    assert estimate_extinction(traj, richardson=True) == pytest.approx(4.0, abs=1e-4)


def test_estimate_extinction_synthetic(p_ref):
    t = np.array([0.0, 1.0, 2.0])
    cfg = SolverConfig(eps_ext=1e-8)
    traj = Trajectory.from_norms(p_ref, t, {"Linf": [1.0, 0.5, 1e-8]}, config=cfg)
    assert estimate_extinction(traj) == pytest.approx(2.0 + 4 * 1e-2, rel=1e-12)
    traj = Trajectory.from_norms(p_ref, t, {"Linf": [1.0, 0.5, 1e-4]}, config=cfg)
    with pytest.raises(NotExtinguished):
        estimate_extinction(traj)


def test_trajectory_records_are_consistent(p_ref):
    g = make_uniform_grid(p_ref, 20.0, 256)
    traj = run(capped(8), g, p_ref, SolverConfig(dt_rel=0.05, snapshot_stride=7))
    assert traj.extinguished
    n = traj.t.size
    for arr in (traj.dt, traj.X, traj.D, traj.Y, traj.Yq, *traj.norms.values()):
        assert arr.shape == (n,)
    np.testing.assert_allclose(np.diff(traj.t), traj.dt[1:], rtol=1e-12, atol=1e-15)
    assert traj.snapshots[0].t == 0.0 and traj.snapshots[-1].t == traj.t[-1]
    assert traj.T_e_est >= traj.t[-1]
    # norms decrease along the flow
    assert np.all(np.diff(traj.norms["L1"]) < 0)
    assert not traj.clip_flagged


def test_barrier_clamp_boundary_holds_value(p_ref):
    g = make_uniform_grid(p_ref, 20.0, 256)
    cfg = SolverConfig(boundary=BARRIER_CLAMP, t_final=0.5)
    traj = run(capped(8), g, p_ref, cfg)
    u_b = 160000.0 * 20.0 ** -8
    assert traj.snapshots[-1].values[-1] == pytest.approx(u_b, rel=1e-14)
    assert traj.t[-1] == pytest.approx(0.5)


def test_discrete_comparison(p_ref):
    g = make_uniform_grid(p_ref, 20.0, 256)
    cfg = SolverConfig(dt_init=4e-3, dt_max=4e-3, adaptive=False, snapshot_stride=5)
    lo = run(capped(8), g, p_ref, cfg)
    hi = run(flat, g, p_ref, cfg)
    rep = check_comparison(lo, hi)
    assert rep.passed, rep


@pytest.mark.parametrize("N", [1, 2, 3])
def test_compact_support_fills_instantly(N):
    p = validate_params(N, 0.5, 0.5, regime="positivity")
    g = make_uniform_grid(p, 6.0, 96)
    traj = run(indicator, g, p, SolverConfig(snapshot_stride=1, dt_rel=0.05))
    assert traj.snapshots[1].values[:-1].min() > 0
    assert check_positivity(traj).passed
