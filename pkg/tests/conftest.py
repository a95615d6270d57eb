import numpy as np
import pytest

from kolmoflow.spectral import Field, TorusGrid, dealias, leray_project

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid2d():
    return TorusGrid(2, 16)


@pytest.fixture
def grid2d64():
    return TorusGrid(2, 64)


def random_scalar(grid, seed, amp=1.0, base=0.0, k_hi=None):
    """Band-limited random scalar with unit peak, scaled and shifted."""
    rng = np.random.default_rng(seed)
    f = dealias(Field(grid, rng.standard_normal(grid.shape)))
    vals = f.values
    peak = float(np.max(np.abs(vals)))
    if peak > 0:
        vals = vals / peak
    if k_hi is not None:
        mask = np.ones(grid.spectral_shape, dtype=bool)
        mask &= grid.kmag <= k_hi
        f = Field(grid, vals)
        vals = Field.from_spectral(grid, f.spec * mask).values
        peak = float(np.max(np.abs(vals)))
        if peak > 0:
            vals = vals / peak
    return Field(grid, base + amp * vals)


def random_vector(grid, seed, amp=1.0, projected=True):
    comps = [random_scalar(grid, seed + 17 * i, amp).values for i in range(grid.d)]
    u = Field(grid, np.stack(comps))
    return leray_project(u) if projected else u
