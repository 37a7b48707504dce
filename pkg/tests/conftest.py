import numpy as np
import pytest

from nslab.decomposition import bump_initial_data, make_partition
from nslab.fixedpoint import compute_N, select_epsilon
from nslab.grid import make_uniform_grid
from nslab.operators import FlowState


def unit_grid(n=8, n_t=None):
    return make_uniform_grid((0, 1), (0, 1), (0, 1), (0, 1), n if n_t is None else n_t, n, n, n)


def const(c):
    return lambda t, x, y, z: c + 0.0 * (t + x + y + z)


@pytest.fixture
def grid8():
    return unit_grid(8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def zero_state(grid8):
    return FlowState.zeros(grid8)


@pytest.fixture(scope="session")
def unit_cell():
    return make_partition(1)[0]


@pytest.fixture(scope="session")
def small_bump(unit_cell):
    """Amplitude 1e-3 bump on the 8^4 grid of the unit cell, with its budget."""
    g = unit_cell.grid(8)
    (u, v, w), cert = bump_initial_data(unit_cell, g, 1e-3)
    budget = select_epsilon(unit_cell.M, compute_N(u, v, w), unit_cell.mu)
    return (u, v, w), cert, budget


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
