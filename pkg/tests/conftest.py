import numpy as np
import pytest

from depthfc.core import CurveLibrary, FocalCurve, PeriodGrid

ACCEPTANCE_LINES = []


@pytest.fixture
def grid8():
    return PeriodGrid(8, 4)


def constant_library(grid, levels):
    return CurveLibrary(grid, np.repeat(np.asarray(levels, float)[:, None], grid.points_per_period, axis=1))


@pytest.fixture
def four_constants():
    """Focal constant 1 against library constants 0.5, 2, 5, -3."""
    grid = PeriodGrid(8, 4)
    lib = constant_library(grid, [0.5, 2, 5, -3])
    focal = FocalCurve(np.ones(4), np.ones(4))
    return lib, focal


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
