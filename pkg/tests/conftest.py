import numpy as np
import pytest

from pemhd.grid import make_grid


@pytest.fixture(scope="session")
def grid8():
    return make_grid(2 * np.pi, 2 * np.pi, 2.0, 8, 8, 8)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(2 * np.pi, 2 * np.pi, 2.0, 16, 16, 8)


def random_mean_zero_coeffs(grid, seed, dealiased=True):
    """Coefficients of a random real mean-zero field."""
    from pemhd import grid as sg
    rng = np.random.default_rng(seed)
    c = sg.forward(grid, rng.standard_normal(grid.shape))
    c[0, 0, 0] = 0.0
    if dealiased:
        c = sg.dealias(grid, c)
    return c
