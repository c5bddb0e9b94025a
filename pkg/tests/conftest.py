from fractions import Fraction

import pytest

from mixedurn import UrnParams

EXAMPLE = UrnParams(1, 3, 2, Fraction(1, 4))
# same model with a float probability
EXAMPLE_FLOAT = UrnParams(1, 3, 2, 0.25)
LIL_PARAMS = UrnParams(1, 10, 1, 0.5)


@pytest.fixture
def example():
    return EXAMPLE_FLOAT


@pytest.fixture
def example_exact():
    return EXAMPLE


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
