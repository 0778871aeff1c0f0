import numpy as np
import pytest

from bqlab.grids import ball_grid, line_grid, torus_grid


@pytest.fixture
def torus64():
    return torus_grid(64)


@pytest.fixture
def torus256():
    return torus_grid(256)


@pytest.fixture
def line1024():
    return line_grid(1024)


@pytest.fixture
def ball128():
    return ball_grid(128)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))
