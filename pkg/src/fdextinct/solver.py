"""Backward-Euler integration of ``u_t = Lap(u^m) - u^q`` on a radial grid.

The implicit system is solved for the Kirchhoff variable ``g = u^m``:

    g^(1/m) + dt g^(q/m) - dt L_h g = u_old,

with ``L_h`` the conservative three-point radial Laplacian built from the
grid's face areas and control volumes (symmetric at ``r = 0``). For
``m <= q`` the map is convex in ``g`` with an M-matrix Jacobian, so Newton
iterates started anywhere in ``g >= 0`` approach the root from above and
stay non-negative; no derivative is singular at ``g = 0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg.lapack import dgtsv

from .exponents import INF, derive, norm_label
from .grid import RadialGrid, State, dirichlet_form, lr_norm, power_integral

log = logging.getLogger(__name__)

DIRICHLET_ZERO = "dirichlet_zero"
BARRIER_CLAMP = "barrier_clamp"
BOUNDARIES = (DIRICHLET_ZERO, BARRIER_CLAMP)


class SolverError(RuntimeError):
    pass


class NewtonDivergence(SolverError):
    pass


class StepTooSmall(SolverError):
    pass


class NonExtinction(SolverError):
    pass


class NotExtinguished(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    eps_ext: float = 1e-8
    snapshot_stride: int = 10
    boundary: str = DIRICHLET_ZERO
    # cap dt at dt_rel times the flat-ODE lifetime of the current sup norm
    dt_rel: float = 0.1
    adaptive: bool = True
    t_final: float | None = None
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if not self.eps_ext > 0:
            raise ValueError("eps_ext must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.snapshot_stride < 1 or self.newton_max_iter < 1:
            raise ValueError("snapshot_stride and newton_max_iter must be >= 1")
        if not self.dt_rel > 0:
            raise ValueError("dt_rel must be positive")

    def refined(self, factor: float = 0.5) -> "SolverConfig":
        """Same schedule with every step-size knob scaled by ``factor``."""
        return replace(
            self,
            dt_init=self.dt_init * factor,
            dt_min=min(self.dt_min, self.dt_init * factor),
            dt_max=self.dt_max * factor,
            dt_rel=self.dt_rel * factor,
            snapshot_stride=max(1, int(round(self.snapshot_stride / factor))),
        )


def norm_orders(m: float) -> tuple:
    return (1.0, m + 1.0, 2.0, INF)


NORM_LABELS = ("L1", "Lm1", "L2", "Linf")


@dataclass(eq=False)
class Trajectory:
    """Per-step records of one run plus sparse state snapshots.

    ``norms`` maps ``"L1"``, ``"Lm1"``, ``"L2"``, ``"Linf"`` to arrays aligned
    with ``t``. Record 0 is the initial datum (``dt = 0``).
    """
    params: object
    t: np.ndarray
    norms: dict
    dt: np.ndarray
    newton_iters: np.ndarray
    grid: RadialGrid | None = None
    config: SolverConfig = field(default_factory=SolverConfig)
    X: np.ndarray | None = None
    D: np.ndarray | None = None
    Y: np.ndarray | None = None
    Yq: np.ndarray | None = None
    boundary_flux: np.ndarray | None = None
    snapshots: list = field(default_factory=list)
    T_e_est: float | None = None
    clipped_mass: float = 0.0
    u0: np.ndarray | None = None

    @classmethod
    def from_norms(cls, params, t, norms, config=None, dt=None, T_e_est=None):
        """Synthetic or reloaded trajectory with norms only."""
        t = np.asarray(t, dtype=float)
        norms = {k: np.asarray(v, dtype=float) for k, v in norms.items()}
        if dt is None:
            dt = np.concatenate(([0.0], np.diff(t)))
        traj = cls(params, t, norms, np.asarray(dt, dtype=float),
                   np.zeros(t.size, dtype=int), config=config or SolverConfig())
        traj.T_e_est = T_e_est
        return traj

    @property
    def extinguished(self) -> bool:
        return bool(self.norms["Linf"][-1] <= self.config.eps_ext)

    @property
    def clip_flagged(self) -> bool:
        if self.u0 is None or self.grid is None:
            return False
        mass0 = power_integral(self.u0, self.grid, 1.0)
        return self.clipped_mass > 1e-6 * mass0

    def snapshot_times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def _laplacian_coefficients(grid: RadialGrid):
    """Off-diagonal couplings of ``L_h`` for the unknowns ``0..M-1``."""
    a = grid.face_areas / grid.h  # face i sits between nodes i and i+1
    V = grid.quad_weights[:-1]
    upper = a / V  # coefficient of g_{i+1} in row i
    lower = np.concatenate(([0.0], a[:-1])) / V  # coefficient of g_{i-1} in row i
    return upper, lower


def apply_laplacian(g: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """``L_h g`` at nodes ``0..M-1`` (node ``M`` is the boundary)."""
    upper, lower = _laplacian_coefficients(grid)
    gi = g[:-1]
    out = upper * (g[1:] - gi)
    out[1:] -= lower[1:] * (gi[1:] - g[:-2])
    return out


def boundary_value(grid: RadialGrid, params, config: SolverConfig, kappa0: float = 0.0) -> float:
    if config.boundary == DIRICHLET_ZERO:
        return 0.0
    ex = derive(params)
    return max(kappa0, ex.kappa_star) * grid.R_max ** (-ex.decay)


@dataclass
class StepInfo:
    iters: int
    residual: float
    clipped_mass: float


def _newton(u_old: np.ndarray, grid: RadialGrid, params, config: SolverConfig,
            dt: float, u_b: float):
    m, q = params.m, params.q
    p, pq = 1.0 / m, q / m
    upper, lower = _laplacian_coefficients(grid)
    M = grid.M
    w = grid.quad_weights[:-1]
    rhs = u_old[:-1]
    umax = float(u_old.max())
    g_b = u_b ** m
    tol = max(config.newton_tol * min(1.0, umax), 64 * np.finfo(float).eps * umax)

    du = -dt * upper[:-1]
    dl = -dt * lower[1:]
    lap_diag = dt * (upper + lower)

    def residual(g):
        flux = np.empty(M)
        flux[:-1] = upper[:-1] * (g[1:] - g[:-1])
        flux[-1] = upper[-1] * (g_b - g[-1])
        lap = flux
        lap[1:] -= lower[1:] * (g[1:] - g[:-1])
        return g ** p + dt * g ** pq - dt * lap - rhs

    g = rhs ** m
    F = residual(g)
    res = float(np.abs(F).max()) if M else 0.0
    it = 0
    while res > tol:
        if it >= config.newton_max_iter:
            raise NewtonDivergence(
                f"residual {res:.3e} > {tol:.3e} after {it} iterations (dt={dt:.3e})")
        it += 1
        diag = p * g ** (p - 1.0) + dt * pq * g ** (pq - 1.0) + lap_diag
        delta, info = dgtsv(dl, diag, du, F)[3:]
        if info != 0:
            raise NewtonDivergence(f"singular Jacobian (lapack info={info})")
        lam = 1.0
        best = None
        for _ in range(7):
            trial = g - lam * delta
            neg = np.minimum(trial, 0.0)
            trial = trial - neg
            Ft = residual(trial)
            rt = float(np.abs(Ft).max())
            if not math.isfinite(rt):
                lam *= 0.5
                continue
            if best is None:
                best = (trial, Ft, rt, neg)
            if rt < res:
                best = (trial, Ft, rt, neg)
                break
            lam *= 0.5
        if best is None:
            raise NewtonDivergence(f"non-finite residual (dt={dt:.3e})")
        g_new, F, res_new, neg = best
        stalled = res_new >= res and np.max(np.abs(g_new - g)) <= 8 * np.finfo(float).eps * g.max()
        g, res = g_new, res_new
        if stalled:
            break  # round-off floor
    clip_u = np.abs(neg) ** p if it else np.zeros(0)
    if clip_u.size and clip_u.max() > config.newton_tol:
        raise NewtonDivergence(f"clipping would remove {clip_u.max():.3e} > newton_tol")
    clipped = float(np.dot(w, clip_u)) if clip_u.size else 0.0
    u_new = np.append(g ** p, u_b)
    return u_new, StepInfo(it, res, clipped)


def step_with_info(state: State, grid: RadialGrid, params, config: SolverConfig,
                   dt: float, u_b: float | None = None) -> tuple[State, StepInfo]:
    if dt < config.dt_min:
        raise StepTooSmall(f"dt={dt:.3e} below dt_min={config.dt_min:.3e}")
    if u_b is None:
        kappa0 = 0.0
        if config.boundary == BARRIER_CLAMP:
            from .diagnostics import fit_kappa0
            kappa0 = fit_kappa0(state.values, grid, params)
        u_b = boundary_value(grid, params, config, kappa0)
    u_old = np.asarray(state.values, dtype=float)
    if not u_old.any() and u_b == 0.0:
        return State(state.t + dt, np.zeros_like(u_old)), StepInfo(0, 0.0, 0.0)
    u_new, info = _newton(u_old, grid, params, config, dt, u_b)
    return State(state.t + dt, u_new), info


def step(state: State, grid: RadialGrid, params, config: SolverConfig, dt: float,
         u_b: float | None = None) -> State:
    """One backward-Euler step of size ``dt``; see :func:`step_with_info`."""
    return step_with_info(state, grid, params, config, dt, u_b)[0]


def _profile_values(u0_profile, grid: RadialGrid) -> np.ndarray:
    if callable(u0_profile):
        u0 = np.asarray(u0_profile(grid.nodes), dtype=float)
    else:
        u0 = np.asarray(u0_profile, dtype=float)
    if u0.shape != grid.nodes.shape:
        raise ValueError(f"initial datum has shape {u0.shape}, grid has {grid.nodes.shape}")
    if np.any(u0 < 0) or not np.all(np.isfinite(u0)):
        raise ValueError("initial datum must be finite and non-negative")
    if not u0.any():
        raise ValueError("initial datum must not vanish identically")
    return u0


def run(u0_profile, grid: RadialGrid, params, config: SolverConfig = SolverConfig()) -> Trajectory:
    """Integrate from ``u0_profile`` until ``||u||_inf <= eps_ext`` (or ``t_final``)."""
    u0 = _profile_values(u0_profile, grid)
    m, q = params.m, params.q
    orders = norm_orders(m)
    kappa0 = 0.0
    if config.boundary == BARRIER_CLAMP:
        from .diagnostics import fit_kappa0
        kappa0 = fit_kappa0(u0, grid, params)
    u_b = boundary_value(grid, params, config, kappa0)

    cols = {k: [] for k in ("t", "dt", "it", "X", "D", "Y", "Yq", "flux", *NORM_LABELS)}
    upper_face = grid.face_areas[-1] / grid.h

    def record(t, u, dt, iters):
        cols["t"].append(t)
        cols["dt"].append(dt)
        cols["it"].append(iters)
        for lab, r in zip(NORM_LABELS, orders):
            cols[lab].append(lr_norm(u, grid, r))
        um = u ** m
        cols["X"].append(power_integral(u, grid, m + 1.0))
        cols["D"].append(dirichlet_form(um, grid))
        cols["Y"].append(power_integral(u, grid, m + q))
        cols["Yq"].append(power_integral(u, grid, q))
        cols["flux"].append(upper_face * (um[-2] - um[-1]))

    t = 0.0
    u = u0.copy()
    record(t, u, 0.0, 0)
    snapshots = [State(0.0, u0.copy())]
    T_bound = float(u0.max()) ** (1.0 - q) / (1.0 - q)
    dt_nom = config.dt_init
    streak = 0
    n = 0
    clipped_total = 0.0
    umax = float(u.max())
    last_snap = 0

    while umax > config.eps_ext:
        if config.t_final is not None and t >= config.t_final * (1 - 1e-14):
            break
        if n >= config.max_steps:
            raise SolverError(f"max_steps={config.max_steps} reached at t={t}")
        dt = dt_nom
        if config.adaptive:
            dt = min(dt, config.dt_max, config.dt_rel * umax ** (1.0 - q) / (1.0 - q))
        if config.t_final is not None:
            dt = min(dt, config.t_final - t)
        if dt < config.dt_min:
            raise StepTooSmall(f"dt={dt:.3e} below dt_min={config.dt_min:.3e} at t={t:.6g}")
        try:
            u_new, info = _newton(u, grid, params, config, dt, u_b)
        except NewtonDivergence as exc:
            log.debug("Newton failed at t=%g: %s; halving dt", t, exc)
            dt_nom = dt / 2.0
            streak = 0
            if dt_nom < config.dt_min:
                raise StepTooSmall(f"Newton keeps failing at t={t:.6g}") from exc
            continue
        n += 1
        t = t + dt
        u = u_new
        umax = float(u.max())
        clipped_total += info.clipped_mass
        record(t, u, dt, info.iters)
        if config.adaptive:
            streak += 1
            if streak >= 5:
                dt_nom = min(dt_nom * 1.2, config.dt_max)
                streak = 0
        if n % config.snapshot_stride == 0:
            snapshots.append(State(t, u.copy()))
            last_snap = n
        if t > 1.1 * T_bound:
            raise NonExtinction(f"t={t:.6g} exceeds 1.1 x a-priori bound {T_bound:.6g}")
    if last_snap != n:
        snapshots.append(State(t, u.copy()))

    arr = {k: np.asarray(v) for k, v in cols.items()}
    traj = Trajectory(
        params=params, t=arr["t"], norms={k: arr[k] for k in NORM_LABELS},
        dt=arr["dt"], newton_iters=arr["it"].astype(int), grid=grid, config=config,
        X=arr["X"], D=arr["D"], Y=arr["Y"], Yq=arr["Yq"], boundary_flux=arr["flux"],
        snapshots=snapshots, clipped_mass=clipped_total, u0=u0,
    )
    if traj.extinguished:
        traj.T_e_est = estimate_extinction(traj)
    if traj.clip_flagged:
        log.warning("clipped mass %.3e exceeds 1e-6 of the initial mass", clipped_total)
    return traj


def estimate_extinction(trajectory: Trajectory, richardson: bool = False) -> float:
    """Extinction time from the last record plus the flat-ODE remaining lifetime.

    With ``richardson=True`` the run is repeated with every step knob halved
    and ``2*T(dt/2) - T(dt)`` is returned (requires a trajectory produced by
    :func:`run`).
    """
    cfg = trajectory.config
    q = trajectory.params.q
    last = float(trajectory.norms["Linf"][-1])
    if last > cfg.eps_ext:
        raise NotExtinguished(f"||u||_inf = {last:.3e} > eps_ext = {cfg.eps_ext:.3e}")
    T = float(trajectory.t[-1]) + last ** (1.0 - q) / (1.0 - q)
    if not richardson:
        return T
    if trajectory.u0 is None or trajectory.grid is None:
        raise ValueError("Richardson refinement needs the initial datum and grid")
    fine = run(trajectory.u0, trajectory.grid, trajectory.params, cfg.refined(0.5))
    return 2.0 * fine.T_e_est - T


__all__ = [
    "SolverConfig", "Trajectory", "StepInfo", "step", "step_with_info", "run",
    "estimate_extinction", "apply_laplacian", "NewtonDivergence", "StepTooSmall",
    "NonExtinction", "NotExtinguished", "SolverError", "DIRICHLET_ZERO",
    "BARRIER_CLAMP", "NORM_LABELS", "norm_orders", "norm_label",
]
