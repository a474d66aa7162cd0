import os

import numpy as np
import pytest
from hypothesis import settings

from frshift.mellin import SampledFunction, make_grid

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

CATALOG = os.path.join(os.path.dirname(__file__), os.pardir, "src", "frshift",
                       "catalog")
LN2 = float(np.log(2.0))


def catalog(name):
    return os.path.normpath(os.path.join(CATALOG, name))


def phi_gaussian(grid, center=0.0, width=1.0, freq=0.0, p=2.0):
    """Samples of f with t**(1/p) f a Gaussian in ln t."""
    x = grid.x
    g = np.exp(-0.5 * ((x - center) / width) ** 2 + 1j * freq * x)
    return SampledFunction(grid, g * np.exp(-x / p))


@pytest.fixture(scope="session")
def grid12():
    return make_grid(12, 4096)


@pytest.fixture(scope="session")
def grid24():
    return make_grid(24, 4096)
