"""Uniform radial grids on a ball of R^N and the weighted quadratures on them.

Node ``i`` sits at ``r_i = i*h`` and owns the control volume
``[r_{i-1/2}, r_{i+1/2}]`` clipped to ``[0, R_max]``; its weight is the exact
N-dimensional volume of that shell. The same face areas build the discrete
Laplacian in :mod:`fdextinct.solver`, so sums against ``quad_weights`` satisfy
a summation-by-parts identity with it.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .exponents import is_inf


class InvalidResolution(ValueError):
    pass


class InvalidDomain(ValueError):
    pass


MIN_CELLS = 16


def sphere_area(N: float) -> float:
    """Surface measure of the unit sphere S^{N-1} (equals 2 for N = 1)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    N: float
    R_max: float
    M: int
    nodes: np.ndarray
    spacing: np.ndarray
    quad_weights: np.ndarray
    face_areas: np.ndarray  # |S^{N-1}| r_{i+1/2}^{N-1}, i = 0..M-1

    @property
    def h(self) -> float:
        return self.R_max / self.M

    def header(self) -> dict:
        return {"N": self.N, "R_max": self.R_max, "M": self.M}

    def ball_volume(self) -> float:
        return sphere_area(self.N) * self.R_max ** self.N / self.N


def make_uniform_grid(params, R_max: float, M: int) -> RadialGrid:
    """Uniform grid with ``M`` cells on ``[0, R_max]`` for dimension ``params.N``.

    ``params`` may be a :class:`~fdextinct.exponents.Params` or a bare number
    giving ``N``.
    """
    N = float(getattr(params, "N", params))
    if not (R_max > 0 and math.isfinite(R_max)):
        raise InvalidDomain(f"R_max must be positive and finite, got {R_max}")
    if int(M) != M or M < MIN_CELLS:
        raise InvalidResolution(f"need an integer M >= {MIN_CELLS}, got {M}")
    M = int(M)
    h = R_max / M
    nodes = h * np.arange(M + 1, dtype=float)
    nodes[-1] = R_max
    faces = h * (np.arange(M, dtype=float) + 0.5)
    S = sphere_area(N)
    # shell volumes |S| (b^N - a^N)/N over the clipped control volumes
    edges = np.concatenate(([0.0], faces, [R_max]))
    vol = S / N * edges ** N
    weights = np.diff(vol)
    face_areas = S * faces ** (N - 1.0)
    return RadialGrid(N, float(R_max), M, nodes, np.full(M, h), weights, face_areas)


@dataclass(frozen=True, eq=False)
class State:
    t: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("state values must be finite")
        if np.any(v < 0):
            raise ValueError("state values must be non-negative")
        object.__setattr__(self, "values", v)


def lr_norm(state, grid: RadialGrid, r_order) -> float:
    """Discrete L^r norm; ``r_order`` is a float >= 1 or :data:`INF`."""
    u = state.values if isinstance(state, State) else np.asarray(state, dtype=float)
    if is_inf(r_order):
        return float(u.max()) if u.size else 0.0
    r = float(r_order)
    if r < 1:
        raise ValueError(f"norm order must be >= 1, got {r}")
    s = float(np.dot(grid.quad_weights, u ** r))
    return s ** (1.0 / r)


def power_integral(u: np.ndarray, grid: RadialGrid, p: float) -> float:
    """``sum_i w_i u_i^p``."""
    return float(np.dot(grid.quad_weights, u ** p))


def dirichlet_form(g: np.ndarray, grid: RadialGrid) -> float:
    """Discrete ``||grad g||_2^2`` from one-sided differences across cell faces."""
    dg = np.diff(g) / grid.h
    return float(np.dot(grid.face_areas * grid.h, dg * dg))


def energy_terms(state, grid: RadialGrid, params) -> tuple[float, float, float]:
    """Return ``(X, D, Y)``: ``||u||_{m+1}^{m+1}``, ``||grad u^m||_2^2``, ``int u^{m+q}``."""
    u = state.values if isinstance(state, State) else np.asarray(state, dtype=float)
    m, q = params.m, params.q
    X = power_integral(u, grid, m + 1.0)
    Y = power_integral(u, grid, m + q)
    D = dirichlet_form(u ** m, grid)
    return X, D, Y


def state_to_csv(state: State, grid: RadialGrid, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    buf.write(f"# t={state.t!r} N={grid.N!r} R_max={grid.R_max!r} M={grid.M}\n")
    buf.write("r,u\n")
    for r, u in zip(grid.nodes, state.values):
        buf.write(f"{float(r)!r},{float(u)!r}\n")
    return buf.getvalue()


def state_from_csv(text: str) -> tuple[State, dict]:
    """Parse :func:`state_to_csv` output; returns the state and the grid header."""
    meta: dict = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
            continue
        if not line.strip() or line.startswith("r,"):
            continue
        rows.append([float(x) for x in line.split(",")])
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    t = float(meta.get("t", "nan"))
    grid_meta = {"N": float(meta["N"]), "R_max": float(meta["R_max"]), "M": int(meta["M"]),
                 "r": arr[:, 0]}
    return State(t, arr[:, 1]), grid_meta
