"""Acceptance criteria 1 to 11; each test prints one PASS/FAIL line.

Criteria 3, 4, 9 and 10 share one resolved run (``run3``). Criteria 6 and 8
apply to every trajectory produced in this module.
"""
import time

import numpy as np
import pytest

from fdextinct.diagnostics import (barrier_spec, check_barrier, check_comparison,
                                   check_dt_bound, check_energy, check_linf_lower,
                                   check_positivity)
from fdextinct.exponents import INF, derive, validate_params
from fdextinct.grid import make_uniform_grid
from fdextinct.rescale import (fit_rate, last_decade_oscillation, rescaled_norm_series,
                               sandwich_ratio)
from fdextinct.solver import SolverConfig, run

from conftest import capped, flat, indicator, report

pytestmark = pytest.mark.slow

WINDOW = (0.7, 0.99)
ALL_RUNS = {}


def _keep(name, traj):
    ALL_RUNS[name] = traj
    return traj


@pytest.fixture(scope="module")
def p_ref():
    return validate_params(1, 0.5, 0.75)


RUN3_CONFIG = SolverConfig(dt_init=1e-3, dt_max=1e-3, dt_rel=1e-4, eps_ext=1e-12,
                           snapshot_stride=100)


@pytest.fixture(scope="module")
def run3(p_ref):
    grid = make_uniform_grid(p_ref, 20.0, 4096)
    t0 = time.perf_counter()
    traj = run(capped(8), grid, p_ref, RUN3_CONFIG)
    traj.wall_time = time.perf_counter() - t0
    return _keep("run3", traj)


@pytest.fixture(scope="module")
def run3_refined(p_ref):
    grid = make_uniform_grid(p_ref, 20.0, 8192)
    return _keep("run3_refined", run(capped(8), grid, p_ref, RUN3_CONFIG.refined(0.5)))


def test_c01_flat_extinction_time(p_ref):
    # R_max is unspecified; 160 keeps the Dirichlet boundary out of the centre before T_e
    grid = make_uniform_grid(p_ref, 160.0, 512)
    cfg = SolverConfig(dt_init=1e-3, dt_max=1e-3, dt_rel=5e-4, snapshot_stride=50)
    t0 = time.perf_counter()
    traj = _keep("flat", run(flat, grid, p_ref, cfg))
    wall = time.perf_counter() - t0
    rel = abs(traj.T_e_est - 4.0) / 4.0
    ok = rel <= 1e-3 and wall < 10.0
    report(1, ok, f"T_e_est={traj.T_e_est:.6f} rel_err={rel:.2e} (tol 1e-3) runtime={wall:.1f}s (<10s)")
    assert ok


def test_c02_exponent_identity():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst, n = 0.0, 0
    while n < 10_000:
        N = int(rng.integers(1, 7))
        lo = max(N - 2, 0) / N
        m = rng.uniform(lo, 1.0)
        q = rng.uniform(m, 1.0)
        try:
            p = validate_params(N, m, q)
        except ValueError:
            continue
        ex = derive(p)
        rhs = 1.0 / ex.gamma_gap  # 1 - gamma without cancellation near q = 1
        worst = max(worst, abs((m + 1) * ex.alpha - N * ex.beta - rhs) / abs(rhs))
        n += 1
    wall = time.perf_counter() - t0
    ok = worst <= 1e-12 and wall < 1.0
    report(2, ok, f"{n} samples, worst rel residual {worst:.2e} (tol 1e-12) runtime={wall:.2f}s (<1s)")
    assert ok


RATE_ORDERS = (("inf", INF), ("1", 1.0), ("m+1", 1.5), ("2", 2.0))


def test_c03_rate_recovery(run3, run3_refined):
    parts, ok = [], run3.wall_time < 120.0
    for lab, r in RATE_ORDERS:
        fit = fit_rate(run3, r, WINDOW, 0.1)
        fine = fit_rate(run3_refined, r, WINDOW, 0.1)
        reduced = fine.rel_dev < fit.rel_dev
        ok &= fit.passed and reduced
        parts.append(f"r={lab}: slope {fit.slope:.4f} vs {fit.expected:.4f} dev {fit.rel_dev:.2%}"
                     f" -> refined {fine.rel_dev:.2%}")
    report(3, ok, "; ".join(parts) + f" (tol 10%, refinement must reduce) runtime={run3.wall_time:.0f}s")
    assert ok


def test_c04_sandwich(run3):
    parts, ok = [], True
    for lab, r in RATE_ORDERS[:1] + RATE_ORDERS[2:]:
        c, C, ratio = sandwich_ratio(run3, r, WINDOW)
        ok &= ratio <= 10.0
        parts.append(f"r={lab}: C/c={ratio:.3f}")
    report(4, ok, "; ".join(parts) + " (<= 10)")
    assert ok


BARRIER_PAIRS = ((0.4, 0.6), (0.4, 0.8), (0.5, 0.75), (0.5, 0.9), (0.6, 0.8), (0.7, 0.95))


@pytest.fixture(scope="module")
def barrier_runs():
    out = []
    for N in (1, 3):
        for m, q in BARRIER_PAIRS:
            p = validate_params(N, m, q)
            grid = make_uniform_grid(p, 20.0, 512)
            traj = run(capped(2 / (q - m)), grid, p, SolverConfig(snapshot_stride=5))
            out.append(_keep(f"barrier N={N} m={m} q={q}", traj))
    return out


def test_c05_barrier(barrier_runs):
    worst, nsnap, ok = np.inf, 0, True
    for traj in barrier_runs:
        rep = check_barrier(traj, barrier_spec(traj.params, 1.0), tol=1e-6)
        ok &= rep.passed
        worst = min(worst, rep.worst_margin)
        nsnap += len(traj.snapshots)
    report(5, ok, f"{len(barrier_runs)} runs, {nsnap} snapshots, worst relative margin {worst:.3e} (tol -1e-6)")
    assert ok


@pytest.fixture(scope="module")
def positivity_runs():
    out = []
    for N in (1, 2, 3):
        for m, q in ((0.5, 0.75), (0.5, 0.5)):
            p = validate_params(N, m, q, regime="positivity")
            grid = make_uniform_grid(p, 10.0, 256)
            traj = run(indicator, grid, p, SolverConfig(snapshot_stride=1))
            out.append(_keep(f"positivity N={N} m={m} q={q}", traj))
    return out


def test_c07_positivity(positivity_runs):
    ok, worst, parts = True, np.inf, []
    for traj in positivity_runs:
        rep = check_positivity(traj)
        ok &= rep.passed
        worst = min(worst, rep.worst_margin)
        parts.append(f"N={traj.params.N:g},m={traj.params.m},q={traj.params.q}")
    report(7, ok, f"{len(positivity_runs)} runs ({', '.join(parts)}), smallest interior value {worst:.3e} (> 0)")
    assert ok


@pytest.fixture(scope="module")
def comparison_pair(p_ref):
    grid = make_uniform_grid(p_ref, 20.0, 1024)
    cfg = SolverConfig(dt_init=2e-3, dt_max=2e-3, adaptive=False, snapshot_stride=5)
    lo = _keep("comparison lower", run(capped(8), grid, p_ref, cfg))
    hi = _keep("comparison upper", run(flat, grid, p_ref, cfg))
    return lo, hi


def test_c11_comparison(comparison_pair):
    rep = check_comparison(*comparison_pair)
    report(11, rep.passed, f"worst margin {rep.worst_margin:.3e} (tol -{rep.tolerance:g}); {rep.note}")
    assert rep.passed


def test_c09_energy(run3):
    rep = check_energy(run3, fraction=0.99)
    report(9, rep.passed, f"{rep.note} (need >= 99%)")
    assert rep.passed


def test_c10_rescaled_boundedness(run3):
    ser = rescaled_norm_series(run3, strict=False)
    inside = run3.t[run3.t < run3.T_e_est] <= WINDOW[1] * run3.T_e_est
    sups = {k: float(np.max(v)) for k, v in ser.items() if k.startswith("v_")}
    finite = all(np.isfinite(v) for v in sups.values())
    osc, med = last_decade_oscillation(ser["s"][inside], ser["v_Linf"][inside])
    ok = finite and osc < 0.2
    report(10, ok, "sup ||v||: " + ", ".join(f"{k[2:]}={v:.3e}" for k, v in sups.items())
           + f"; last-decade oscillation of v_Linf {osc:.3f} x median (need < 0.2)")
    assert ok


# criteria 6 and 8 sweep every trajectory above; keep them last in the module
def test_c06_linf_lower(run3, run3_refined, barrier_runs, positivity_runs, comparison_pair):
    bad, worst = [], np.inf
    for name, traj in ALL_RUNS.items():
        rep = check_linf_lower(traj, slack=0.05)
        worst = min(worst, rep.worst_margin)
        if not rep.passed:
            bad.append(f"{name} ({rep.worst_margin:.3f})")
    ok = not bad
    report(6, ok, f"{len(ALL_RUNS)} runs, worst relative margin {worst:.4f} (slack -0.05)"
           + (f"; failing: {', '.join(bad)}" if bad else ""))
    assert ok


def test_c08_dt_bound(run3, run3_refined, barrier_runs, positivity_runs, comparison_pair):
    bad, worst = [], np.inf
    for name, traj in ALL_RUNS.items():
        rep = check_dt_bound(traj)
        worst = min(worst, rep.worst_margin)
        if not rep.passed:
            bad.append(f"{name} ({rep.worst_margin:.3e})")
    ok = not bad
    report(8, ok, f"{len(ALL_RUNS)} runs, worst margin {worst:.3e} (slack -newton_tol)"
           + (f"; failing: {', '.join(bad)}" if bad else ""))
    assert ok
