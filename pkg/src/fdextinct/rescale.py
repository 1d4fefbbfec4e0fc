"""Self-similar variables and extinction-rate regression.

With ``tau = T_e - t`` the change of variables is

    s = ln(T_e / tau),   y = r tau^beta,   v = tau^(-alpha) u,

under which ``||u(t)||_r = tau^(alpha - N beta / r) ||v(s)||_r``; rescaled
norms therefore come straight from recorded norms, no regridding involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exponents import INF, derive, is_inf
from .grid import State
from .solver import NORM_LABELS, Trajectory, norm_orders


class TimeOutOfRange(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RescaledFrame:
    s: float
    y_nodes: np.ndarray
    v_values: np.ndarray


def to_selfsimilar(state: State, nodes, T_e: float, exponents) -> RescaledFrame:
    """Map a snapshot to ``(s, y, v)``; ``nodes`` is a grid or an array of radii."""
    r = np.asarray(getattr(nodes, "nodes", nodes), dtype=float)
    tau = T_e - state.t
    if not (state.t >= 0 and tau > 0):
        raise TimeOutOfRange(f"need 0 <= t < T_e, got t={state.t!r}, T_e={T_e!r}")
    return RescaledFrame(
        s=math.log(T_e / tau),
        y_nodes=r * tau ** exponents.beta,
        v_values=np.asarray(state.values, dtype=float) * tau ** (-exponents.alpha),
    )


def from_selfsimilar(frame: RescaledFrame, T_e: float, exponents) -> tuple[State, np.ndarray]:
    """Inverse of :func:`to_selfsimilar`: returns the state and the radii."""
    tau = T_e * math.exp(-frame.s)
    t = T_e * (1.0 - math.exp(-frame.s))
    return State(t, frame.v_values * tau ** exponents.alpha), frame.y_nodes * tau ** (-exponents.beta)


def _exponents_for(trajectory, exponents):
    return exponents if exponents is not None else derive(trajectory.params)


def rescaled_norm_series(trajectory: Trajectory, exponents=None, T_e: float | None = None,
                         strict: bool = True) -> dict:
    """``{"s": ..., "v_L1": ..., "v_Lm1": ..., "v_L2": ..., "v_Linf": ...}``.

    Records at or beyond ``T_e`` raise :class:`TimeOutOfRange` unless
    ``strict=False``, in which case they are dropped.
    """
    ex = _exponents_for(trajectory, exponents)
    T = trajectory.T_e_est if T_e is None else T_e
    if T is None:
        raise ValueError("trajectory has no extinction-time estimate")
    t = trajectory.t
    keep = t < T
    if not keep.all() and strict:
        raise TimeOutOfRange(f"{int((~keep).sum())} record(s) at t >= T_e = {T!r}")
    tau = T - t[keep]
    out = {"s": np.log(T / tau)}
    for lab, r in zip(NORM_LABELS, norm_orders(trajectory.params.m)):
        out["v_" + lab] = trajectory.norms[lab][keep] / tau ** ex.rate(r)
    return out


def last_decade_oscillation(s: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """``(max - min) / median`` of ``values`` over the final ``ln 10`` of ``s``; returns (osc, median)."""
    s = np.asarray(s)
    sel = s >= s.max() - math.log(10.0)
    v = np.asarray(values)[sel]
    med = float(np.median(v))
    return float((v.max() - v.min()) / med), med


@dataclass
class RateFitResult:
    r: object
    slope: float
    stderr: float
    window: tuple
    expected: float
    rel_dev: float
    passed: bool
    tolerance: float
    sensitivity: float = 0.0
    n_points: int = 0

    @property
    def band(self) -> float:
        """Reported error band: two standard errors plus the T_e sensitivity."""
        return 2.0 * self.stderr + self.sensitivity

    def row(self) -> dict:
        return {"r": "inf" if is_inf(self.r) else self.r, "slope": self.slope,
                "stderr": self.stderr, "expected": self.expected, "rel_dev": self.rel_dev,
                "pass": self.passed, "window_lo": self.window[0], "window_hi": self.window[1]}


def _norm_label(trajectory, r_order) -> str:
    m = trajectory.params.m
    if is_inf(r_order):
        return "Linf"
    for lab, r in zip(NORM_LABELS, norm_orders(m)):
        if not is_inf(r) and math.isclose(float(r_order), r, rel_tol=0, abs_tol=1e-12):
            return lab
    raise ValueError(f"norm order {r_order!r} is not recorded (have 1, m+1, 2, inf)")


def _slope(t, y, T):
    x = np.log(T - t)
    fit = stats.linregress(x, np.log(y))
    return float(fit.slope), float(fit.stderr)


def fit_rate(trajectory: Trajectory, r_order, window_frac=(0.7, 0.99), tolerance: float = 0.1,
             exponents=None, min_points: int = 10) -> RateFitResult:
    """Least-squares slope of ``log ||u||_r`` against ``log(T_e - t)`` on a window.

    ``window_frac`` selects records with ``f_lo T_e <= t <= f_hi T_e``. The fit
    is repeated with ``T_e`` shifted by one final step either way; the larger
    change in slope is stored as ``sensitivity``.
    """
    lo, hi = window_frac
    if not (0.0 < lo < hi < 1.0):
        raise ValueError(f"window must satisfy 0 < lo < hi < 1, got {window_frac}")
    ex = _exponents_for(trajectory, exponents)
    T = trajectory.T_e_est
    if T is None:
        raise ValueError("trajectory has no extinction-time estimate")
    lab = _norm_label(trajectory, r_order)
    t = trajectory.t
    y = trajectory.norms[lab]
    sel = (t >= lo * T) & (t <= hi * T) & (y > 0)
    n = int(sel.sum())
    if n < min_points:
        raise InsufficientData(f"{n} records in window {window_frac}, need {min_points}")
    slope, se = _slope(t[sel], y[sel], T)
    dt_last = float(trajectory.dt[-1]) if trajectory.dt.size else 0.0
    sens = 0.0
    if dt_last > 0:
        for dT in (-dt_last, dt_last):
            sens = max(sens, abs(_slope(t[sel], y[sel], T + dT)[0] - slope))
    expected = ex.rate(INF if lab == "Linf" else float(r_order))
    rel = abs(slope - expected) / abs(expected)
    return RateFitResult(r_order, slope, se, (float(t[sel][0]), float(t[sel][-1])), expected,
                         rel, bool(rel <= tolerance), tolerance, sens, n)


def sandwich_ratio(trajectory: Trajectory, r_order, window_frac=(0.7, 0.99), exponents=None):
    """Range ``[c, C]`` of ``||u(t)||_r / (T_e - t)^rate(r)`` over the window; returns ``(c, C, C/c)``."""
    ex = _exponents_for(trajectory, exponents)
    T = trajectory.T_e_est
    lab = _norm_label(trajectory, r_order)
    t = trajectory.t
    sel = (t >= window_frac[0] * T) & (t <= window_frac[1] * T)
    ratio = trajectory.norms[lab][sel] / (T - t[sel]) ** ex.rate(INF if lab == "Linf" else float(r_order))
    c, C = float(ratio.min()), float(ratio.max())
    return c, C, C / c
