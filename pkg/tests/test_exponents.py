import math

import pytest
from hypothesis import given, settings, strategies as st

from fdextinct.exponents import (INF, OrderViolation, ParamError, SobolevViolation, derive,
                                 validate_params)


def test_valid_reference():
    p = validate_params(1, 0.5, 0.75)
    assert (p.N, p.m, p.q) == (1.0, 0.5, 0.75)


@pytest.mark.parametrize("N,m,q,exc", [
    (3, 0.2, 0.5, SobolevViolation),
    (2, 0.75, 0.5, OrderViolation),
    (1, 0.0, 0.5, OrderViolation),
    (1, 0.5, 1.0, OrderViolation),
    (1, 0.5, 0.5, OrderViolation),
    (4, 0.5, 0.7, SobolevViolation),
])
def test_invalid(N, m, q, exc):
    with pytest.raises(exc):
        validate_params(N, m, q)


def test_dimension_and_nonfinite():
    with pytest.raises(ParamError):
        validate_params(0.5, 0.5, 0.75)
    with pytest.raises(ParamError):
        validate_params(1, float("nan"), 0.75)


def test_positivity_regime_admits_equal_exponents():
    p = validate_params(3, 0.2, 0.2, regime="positivity")
    assert p.regime == "positivity"
    with pytest.raises(OrderViolation):
        validate_params(1, 0.6, 0.5, regime="positivity")


def test_reference_values():
    ex = derive(validate_params(1, 0.5, 0.75))
    assert ex.alpha == 4.0
    assert ex.beta == 0.5
    assert ex.rate(1) == 3.5
    assert ex.rate(1.5) == pytest.approx(11 / 3, rel=1e-15)
    assert ex.rate(2) == 3.75
    assert ex.rate(INF) == 4.0
    assert ex.gamma == pytest.approx(9 / 11, rel=1e-15)
    assert 1 / (1 - ex.gamma) == pytest.approx(5.5, rel=1e-14)
    assert (1.5 * ex.alpha - ex.beta) == pytest.approx(5.5, rel=1e-15)
    assert ex.kappa_star == pytest.approx(160000.0, rel=1e-13)
    assert ex.decay == 8.0
    assert ex.theta == pytest.approx(2 / 27, rel=1e-14)


def test_rate_rejects_small_order():
    with pytest.raises(ValueError):
        derive(validate_params(1, 0.5, 0.75)).rate(0.5)


@st.composite
def valid_params(draw):
    N = draw(st.sampled_from([1, 2, 3, 4]))
    lo = max(N - 2, 0) / N
    m = draw(st.floats(lo + 1e-3, 0.98, allow_nan=False))
    q = draw(st.floats(m + 1e-3, 0.999, allow_nan=False))
    return validate_params(N, m, q)


@settings(max_examples=300, deadline=None)
@given(valid_params())
def test_exponent_invariants(p):
    ex = derive(p)
    assert ex.alpha > 0
    assert 0 < ex.gamma < 1
    assert 0 < ex.theta < 1
    lhs = (p.m + 1) * ex.alpha - p.N * ex.beta
    assert abs(ex.gamma_gap - (1 - ex.gamma)) <= 1e-13
    rhs = 1 / ex.gamma_gap
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)
    assert 2 * p.q / (p.q - p.m) > p.N


@settings(max_examples=200, deadline=None)
@given(valid_params(), st.floats(1, 50), st.floats(1, 50))
def test_rate_non_increasing(p, r1, r2):
    ex = derive(p)
    a, b = sorted((r1, r2))
    assert ex.rate(a) <= ex.rate(b) + 1e-12
    assert ex.rate(b) <= ex.rate(INF)
    assert ex.rate(INF) == ex.alpha


def test_kappa_star_overflow_is_inf():
    ex = derive(validate_params(1, 0.5, 0.5 + 1e-4))
    assert math.isinf(ex.kappa_star)
