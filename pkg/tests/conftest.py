import numpy as np
import pytest

from fdextinct.exponents import validate_params


@pytest.fixture
def p_ref():
    """The reference parameters N=1, m=1/2, q=3/4 used throughout."""
    return validate_params(1, 0.5, 0.75)


def capped(decay):
    def f(r):
        r = np.asarray(r, float)
        out = np.ones_like(r)
        out[r > 1] = r[r > 1] ** (-decay)
        return out
    return f


def flat(r):
    return np.ones_like(np.asarray(r, float))


def indicator(r):
    return np.where(np.asarray(r, float) <= 1.0, 1.0, 0.0)


ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    """Record one acceptance verdict line and echo it."""
    line = f"[criterion {criterion:>2}] {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
