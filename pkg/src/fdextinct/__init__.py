"""Fast diffusion with strong absorption, ``u_t = Lap(u^m) - u^q``, on radial grids.

Submodules:

    exponents    admissibility of (N, m, q) and closed-form scaling exponents
    grid         radial grids, weighted L^r norms, energy integrals
    solver       backward-Euler/Newton time stepping and extinction time
    diagnostics  barrier, lower-bound, positivity and derivative checks
    rescale      self-similar variables and extinction-rate fits
    experiment   configs, single runs, sweeps and file output
"""
from .exponents import (INF, DerivedExponents, OrderViolation, Params, SobolevViolation,
                        derive, validate_params)
from .grid import RadialGrid, State, energy_terms, lr_norm, make_uniform_grid
from .solver import SolverConfig, Trajectory, estimate_extinction, run, step

__version__ = "0.1.0"

__all__ = ["INF", "DerivedExponents", "OrderViolation", "Params", "SobolevViolation", "derive",
           "validate_params", "RadialGrid", "State", "energy_terms", "lr_norm",
           "make_uniform_grid", "SolverConfig", "Trajectory", "estimate_extinction", "run", "step"]
