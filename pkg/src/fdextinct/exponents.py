"""Parameter admissibility and closed-form exponents.

Everything here is a pure function of ``(N, m, q)``; the solver and the
analysis modules read their scaling exponents from :class:`DerivedExponents`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


class ParamError(ValueError):
    """Base class for inadmissible ``(N, m, q)``."""


class OrderViolation(ParamError):
    """``0 < m < q < 1`` fails (or ``0 < m <= q < 1`` in the positivity regime)."""


class SobolevViolation(ParamError):
    """``m <= (N-2)_+/N``."""


class _Infinity:
    """Norm-order token for the sup norm."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

NormOrder = Union[float, _Infinity]


def is_inf(r) -> bool:
    return r is INF or (isinstance(r, float) and math.isinf(r))


def norm_label(r, m: float) -> str:
    """Column suffix for a norm order: ``L1``, ``Lm1``, ``L2``, ``Linf`` or ``L<r>``."""
    if is_inf(r):
        return "Linf"
    if r == m + 1:
        return "Lm1"
    if float(r).is_integer():
        return f"L{int(r)}"
    return f"L{r!r}"


@dataclass(frozen=True)
class Params:
    N: float
    m: float
    q: float
    regime: str = "rates"


def validate_params(N: float, m: float, q: float, regime: str = "rates") -> Params:
    """Return :class:`Params` if ``(N, m, q)`` is admissible.

    ``regime="rates"`` enforces ``(N-2)_+/N < m < q < 1``. ``regime="positivity"``
    only asks for ``0 < m <= q < 1``, which is all the everywhere-positivity
    property needs (and admits ``q == m``).
    """
    N, m, q = float(N), float(m), float(q)
    if not all(math.isfinite(v) for v in (N, m, q)):
        raise ParamError(f"non-finite parameters N={N}, m={m}, q={q}")
    if N < 1:
        raise ParamError(f"dimension N={N} must be >= 1")
    if regime == "rates":
        if not (0 < m < q < 1):
            raise OrderViolation(f"need 0 < m < q < 1, got m={m}, q={q}")
        crit = max(N - 2.0, 0.0) / N
        if m <= crit:
            raise SobolevViolation(f"need m > (N-2)_+/N = {crit:.6g}, got m={m} (N={N:g})")
    elif regime == "positivity":
        if not (0 < m <= q < 1):
            raise OrderViolation(f"need 0 < m <= q < 1, got m={m}, q={q}")
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return Params(N, m, q, regime)


@dataclass(frozen=True)
class DerivedExponents:
    N: float
    m: float
    q: float
    alpha: float
    beta: float
    gamma: float
    theta: float
    kappa_star: float
    decay: float
    # 1 - gamma evaluated without cancellation; gamma -> 1 as q -> 1
    gamma_gap: float = math.nan

    def rate(self, r: NormOrder) -> float:
        """Extinction-rate exponent ``alpha - N*beta/r`` of the L^r norm."""
        if is_inf(r):
            return self.alpha
        r = float(r)
        if r < 1:
            raise ValueError(f"norm order must be >= 1, got {r}")
        return self.alpha - self.N * self.beta / r

    def as_dict(self) -> dict:
        return {
            "N": self.N, "m": self.m, "q": self.q,
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
            "theta": self.theta, "kappa_star": self.kappa_star, "decay": self.decay,
            "rate_L1": self.rate(1.0), "rate_Lm1": self.rate(self.m + 1.0),
            "rate_L2": self.rate(2.0), "rate_Linf": self.rate(INF),
        }


def derive(params: Params) -> DerivedExponents:
    if params.regime != "rates":
        params = validate_params(params.N, params.m, params.q)
    N, m, q = params.N, params.m, params.q
    alpha = 1.0 / (1.0 - q)
    beta = (q - m) / (2.0 * (1.0 - q))
    denom = m * (N + 2) - q * N + 2
    gamma = (m * (N + 2) - q * (N - 2)) / denom
    gamma_gap = 2.0 * (1.0 - q) / denom
    theta = 2 * N * m * (1 - q) / ((m + 1) * (m * (N + 2) - q * (N - 2)))
    try:
        kappa_star = (2 * m * (m + q) / (q - m) ** 2) ** (1.0 / (q - m))
    except OverflowError:  # q - m tiny
        kappa_star = math.inf
    decay = 2.0 / (q - m)
    return DerivedExponents(N, m, q, alpha, beta, gamma, theta, kappa_star, decay, gamma_gap)
