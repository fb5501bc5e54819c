import numpy as np
import pytest

from sgsoliton.numerics import Grid
from sgsoliton.profiles import SolitonParams

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def grid():
    return Grid(40.0, 4096)


@pytest.fixture(scope="session")
def params():
    return SolitonParams(0.5, 0.3, -0.1)


@pytest.fixture
def acceptance():
    """Record one acceptance line; all lines are repeated in the terminal summary."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE.append((number, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)


def assert_small(value, tol):
    assert np.all(np.abs(value) < tol), f"{np.max(np.abs(value)):.3g} >= {tol:.3g}"
