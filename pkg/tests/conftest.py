import numpy as np
import pytest

from mmca.dataset import build_indicator, parse_csv

# Ten answers on three variables with 3, 3 and 2 categories.
EXAMPLE_CSV = """v1,v2,v3
a,a,a
b,b,b
a,c,b
a,a,b
b,a,b
c,a,b
a,a,a
a,a,b
c,a,b
a,a,b
"""

EXAMPLE_G = np.array([
    [1, 0, 0, 1, 0, 0, 1, 0],
    [0, 1, 0, 0, 1, 0, 0, 1],
    [1, 0, 0, 0, 0, 1, 0, 1],
    [1, 0, 0, 1, 0, 0, 0, 1],
    [0, 1, 0, 1, 0, 0, 0, 1],
    [0, 0, 1, 1, 0, 0, 0, 1],
    [1, 0, 0, 1, 0, 0, 1, 0],
    [1, 0, 0, 1, 0, 0, 0, 1],
    [0, 0, 1, 1, 0, 0, 0, 1],
    [1, 0, 0, 1, 0, 0, 0, 1],
])

_ACCEPTANCE_LINES = []


@pytest.fixture
def example_csv():
    return EXAMPLE_CSV


@pytest.fixture
def example_G():
    return build_indicator(parse_csv(EXAMPLE_CSV))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_report():
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
