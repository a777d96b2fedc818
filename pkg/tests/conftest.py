import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hwlab.grid import Field, make_grid

settings.register_profile("hwlab", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hwlab")


def random_field(grid, seed, smooth=True):
    rs = np.random.default_rng(seed)
    c = rs.normal(size=grid.shape) + 1j * rs.normal(size=grid.shape)
    if smooth:
        c *= np.exp(-0.5 * (grid.XI**2 + grid.ETA**2))
    return Field.from_spectral(grid, c)


@pytest.fixture
def torus():
    return make_grid(64, 32, 40.0)


@pytest.fixture
def plane():
    return make_grid(64, 64, 20.0, "truncated", 20.0)
