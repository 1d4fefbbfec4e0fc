"""Post-hoc checks of a :class:`~fdextinct.solver.Trajectory`.

Every check is a pure function returning a :class:`CheckReport`; the worst
margin is signed and the report passes iff ``worst_margin >= -tolerance``
(positivity is the one strict check, see :func:`check_positivity`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exponents import derive
from .grid import RadialGrid
from .solver import DIRICHLET_ZERO, Trajectory


class Unbounded(ValueError):
    pass


@dataclass(frozen=True)
class BarrierSpec:
    kappa0: float
    kappa_star: float
    decay: float

    @property
    def kappa_eff(self) -> float:
        return max(self.kappa0, self.kappa_star)

    def value(self, r):
        return self.kappa_eff * np.asarray(r, dtype=float) ** (-self.decay)


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_margin: float
    t: float = math.nan
    r: float = math.nan
    tolerance: float = 0.0
    note: str = ""
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {"check": self.name, "pass": self.passed, "worst_margin": self.worst_margin,
                "t": self.t, "r": self.r, "tolerance": self.tolerance}


def fit_kappa0(u0_profile, grid: RadialGrid, params) -> float:
    """Smallest ``kappa0`` with ``u0(r) <= kappa0 r^(-2/(q-m))`` at all nodes ``r > 0``."""
    decay = 2.0 / (params.q - params.m)
    u0 = np.asarray(u0_profile(grid.nodes) if callable(u0_profile) else u0_profile, dtype=float)
    r = grid.nodes[1:]
    with np.errstate(over="ignore"):
        k = u0[1:] * r ** decay
    if not np.all(np.isfinite(k)):
        raise Unbounded("u0 * r^decay is not finite on the grid")
    return float(k.max())


def barrier_spec(params, kappa0: float) -> BarrierSpec:
    ex = derive(params)
    return BarrierSpec(float(kappa0), ex.kappa_star, ex.decay)


def barrier_residual(r, kappa: float, params) -> np.ndarray:
    """``-Lap(S^m) + S^q`` for ``S = kappa |x|^(-2/(q-m))``, exact radial derivatives."""
    N, m, q = params.N, params.m, params.q
    r = np.asarray(r, dtype=float)
    a = 2.0 * m / (q - m)  # S^m = kappa^m r^-a
    lap = kappa ** m * a * (a + 2.0 - N) * r ** (-a - 2.0)
    return -lap + kappa ** q * r ** (-2.0 * q / (q - m))


def barrier_lower_bound(r, kappa: float, params) -> np.ndarray:
    """``kappa^m (kappa^(q-m) - kappa_*^(q-m)) r^(-2q/(q-m))``; non-negative iff kappa >= kappa_*."""
    m, q = params.m, params.q
    ks = derive(params).kappa_star
    return kappa ** m * (kappa ** (q - m) - ks ** (q - m)) * np.asarray(r, float) ** (-2 * q / (q - m))


def check_barrier(trajectory: Trajectory, spec: BarrierSpec, tol: float = 1e-6) -> CheckReport:
    """``u(t, r) <= kappa_eff r^-decay (1 + tol)`` at every snapshot node with ``r > 0``."""
    grid = trajectory.grid
    r = grid.nodes[1:]
    thr = spec.value(r)
    worst, where = math.inf, (math.nan, math.nan)
    for snap in trajectory.snapshots:
        u = snap.values[1:]
        pos = u > 0
        if not pos.any():
            continue
        marg = (thr[pos] - u[pos]) / thr[pos]
        i = int(np.argmin(marg))
        if marg[i] < worst:
            worst, where = float(marg[i]), (snap.t, float(r[pos][i]))
    return CheckReport("barrier", worst >= -tol, worst, *where, tolerance=tol,
                       note=f"kappa_eff={spec.kappa_eff!r}; r=0 excluded")


def _record_dt(trajectory: Trajectory) -> np.ndarray:
    dt = np.asarray(trajectory.dt, dtype=float)
    nxt = np.append(dt[1:], dt[-1])
    return np.maximum(dt, nxt)


def check_linf_lower(trajectory: Trajectory, exponents=None, slack: float = 0.05,
                     dt_factor: float = 100.0) -> CheckReport:
    """``||u(t)||_inf >= [(1-q)(T_e - t)]^(1/(1-q))`` with relative slack.

    Margins are relative to the threshold. Only records with
    ``T_e - t >= dt_factor * dt`` are inspected.
    """
    q = trajectory.params.q
    T = trajectory.T_e_est
    if T is None:
        raise ValueError("trajectory has no extinction-time estimate")
    t = trajectory.t
    sel = (T - t) >= dt_factor * _record_dt(trajectory)
    if not sel.any():
        return CheckReport("linf_lower", True, math.inf, tolerance=slack, note="empty window")
    thr = ((1.0 - q) * (T - t[sel])) ** (1.0 / (1.0 - q))
    marg = (trajectory.norms["Linf"][sel] - thr) / thr
    i = int(np.argmin(marg))
    return CheckReport("linf_lower", bool(marg[i] >= -slack), float(marg[i]), float(t[sel][i]),
                       math.nan, slack, note=f"{int(sel.sum())} records in window")


def check_positivity(trajectory: Trajectory, dt_factor: float = 10.0) -> CheckReport:
    """Strict positivity of interior nodes at snapshots with ``0 < t < T_e - 10 dt``.

    ``worst_margin`` is the smallest inspected nodal value and the check passes
    iff it is strictly positive.
    """
    T = trajectory.T_e_est if trajectory.T_e_est is not None else math.inf
    dt_last = float(trajectory.dt[-1])
    hi = T - dt_factor * dt_last
    end = -1 if trajectory.config.boundary == DIRICHLET_ZERO else None
    r = trajectory.grid.nodes[:end]
    worst, where, count = math.inf, (math.nan, math.nan), 0
    for snap in trajectory.snapshots:
        if not (0.0 < snap.t < hi):
            continue
        count += 1
        u = snap.values[:end]
        i = int(np.argmin(u))
        if u[i] < worst:
            worst, where = float(u[i]), (snap.t, float(r[i]))
    return CheckReport("positivity", bool(worst > 0.0), worst, *where, tolerance=0.0,
                       note=f"{count} snapshots in (0, {hi!r})")


def check_dt_bound(trajectory: Trajectory, params=None, tol: float | None = None) -> CheckReport:
    """``(u_b - u_a)/(t_b - t_a) <= u_b / ((1-m) t_b) + tol`` over consecutive snapshots, ``t_a > 0``."""
    params = params or trajectory.params
    m = params.m
    tol = trajectory.config.newton_tol if tol is None else tol
    snaps = trajectory.snapshots
    worst, where, pairs, skipped = math.inf, (math.nan, math.nan), 0, 0
    end = -1 if trajectory.config.boundary == DIRICHLET_ZERO else None
    r = trajectory.grid.nodes[:end]
    for a, b in zip(snaps[:-1], snaps[1:]):
        if a.t <= 0.0:
            skipped += 1
            continue
        pairs += 1
        ua, ub = a.values[:end], b.values[:end]
        quot = (ub - ua) / (b.t - a.t)
        marg = ub / ((1.0 - m) * b.t) - quot
        i = int(np.argmin(marg))
        if marg[i] < worst:
            worst, where = float(marg[i]), (b.t, float(r[i]))
    note = f"{pairs} pairs"
    if skipped:
        note += f"; {skipped} pair(s) starting at t=0 excluded"
    return CheckReport("dt_bound", bool(worst >= -tol), worst, *where, tolerance=tol, note=note)


def check_apriori_extinction(trajectory: Trajectory, rel: float = 1e-2) -> CheckReport:
    """``T_e <= ||u0||_inf^(1-q)/(1-q) * (1 + rel)``; margin is relative to the bound."""
    q = trajectory.params.q
    bound = float(trajectory.norms["Linf"][0]) ** (1.0 - q) / (1.0 - q)
    marg = (bound - trajectory.T_e_est) / bound
    return CheckReport("apriori_extinction", bool(marg >= -rel), float(marg),
                       float(trajectory.T_e_est), math.nan, rel, note=f"bound={bound!r}")


def energy_residuals(trajectory: Trajectory):
    """Per-step residual of ``X'/(m+1) + D + Y = 0`` and its tolerance."""
    m = trajectory.params.m
    X, D, Y, dt = trajectory.X, trajectory.D, trajectory.Y, trajectory.dt
    res = (X[1:] - X[:-1]) / ((m + 1.0) * dt[1:]) + D[1:] + Y[1:]
    tol = 1e-3 * np.maximum(X[:-1] / dt[1:] * 1e-2, D[1:] + Y[1:])
    return res, tol


def check_energy(trajectory: Trajectory, fraction: float = 0.99) -> CheckReport:
    res, tol = energy_residuals(trajectory)
    ok = np.abs(res) <= tol
    frac = float(ok.mean()) if ok.size else 1.0
    ratio = np.abs(res) / tol
    i = int(np.argmax(ratio)) if ratio.size else 0
    return CheckReport("energy", frac >= fraction, frac - fraction,
                       float(trajectory.t[i + 1]) if ratio.size else math.nan, math.nan, 0.0,
                       note=f"{frac:.4%} of {ok.size} steps within tolerance",
                       extra={"fraction": frac, "worst_ratio": float(ratio.max()) if ratio.size else 0.0})


def mass_balance_residuals(trajectory: Trajectory, include_flux: bool = True):
    """Relative per-step defect of ``||u^n||_1 - ||u^{n+1}||_1 = dt (int u^q + boundary outflow)``."""
    L1 = trajectory.norms["L1"]
    dt = trajectory.dt[1:]
    sink = trajectory.Yq[1:].copy()
    if include_flux:
        sink = sink + trajectory.boundary_flux[1:]
    loss = L1[:-1] - L1[1:]
    return (loss - dt * sink) / (dt * sink)


def check_mass_balance(trajectory: Trajectory, rel: float = 1e-3, fraction: float = 1.0,
                       include_flux: bool = True) -> CheckReport:
    d = np.abs(mass_balance_residuals(trajectory, include_flux))[1:]  # step 1 moves the boundary node
    ok = d <= rel
    frac = float(ok.mean()) if ok.size else 1.0
    i = int(np.argmax(d)) if d.size else 0
    return CheckReport("mass_balance", frac >= fraction, frac - fraction,
                       float(trajectory.t[i + 2]) if d.size else math.nan, math.nan, 0.0,
                       note=f"{frac:.4%} of steps within {rel:g}; max defect {d.max() if d.size else 0:.3e}",
                       extra={"fraction": frac})


def check_comparison(lower: Trajectory, upper: Trajectory, tol: float | None = None) -> CheckReport:
    """Nodewise ``lower <= upper + tol`` at snapshot times present in both runs."""
    tol = 10.0 * lower.config.newton_tol if tol is None else tol
    up = {s.t: s for s in upper.snapshots}
    worst, where, matched = math.inf, (math.nan, math.nan), 0
    r = lower.grid.nodes
    for s in lower.snapshots:
        o = up.get(s.t)
        if o is None:
            continue
        matched += 1
        marg = o.values - s.values
        i = int(np.argmin(marg))
        if marg[i] < worst:
            worst, where = float(marg[i]), (s.t, float(r[i]))
    return CheckReport("comparison", bool(worst >= -tol), worst, *where, tolerance=tol,
                       note=f"{matched} matched snapshot times")


CHECKS = ("barrier", "linf_lower", "positivity", "dt_bound", "apriori_extinction",
          "energy", "mass_balance")


def run_checks(trajectory: Trajectory, names=("barrier", "linf_lower", "positivity", "dt_bound"),
               kappa0: float | None = None) -> list[CheckReport]:
    out = []
    for name in names:
        if name == "barrier":
            k0 = fit_kappa0(trajectory.u0 if trajectory.u0 is not None
                            else trajectory.snapshots[0].values, trajectory.grid,
                            trajectory.params) if kappa0 is None else kappa0
            out.append(check_barrier(trajectory, barrier_spec(trajectory.params, k0)))
        elif name == "linf_lower":
            out.append(check_linf_lower(trajectory))
        elif name == "positivity":
            out.append(check_positivity(trajectory))
        elif name == "dt_bound":
            out.append(check_dt_bound(trajectory))
        elif name == "apriori_extinction":
            out.append(check_apriori_extinction(trajectory))
        elif name == "energy":
            out.append(check_energy(trajectory))
        elif name == "mass_balance":
            out.append(check_mass_balance(trajectory))
        else:
            raise ValueError(f"unknown check {name!r}; known: {CHECKS}")
    return out
