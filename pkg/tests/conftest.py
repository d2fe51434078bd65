import numpy as np
import pytest
from hypothesis import settings

from hgmt.sets import gen_corner, gen_vertical_plane

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_plane():
    """The plane x = 0, extent 1.1, h = 1/32."""
    return gen_vertical_plane(0.0, 0.0, 1.1, 1 / 32, 0.3)


@pytest.fixture(scope="session")
def tilted_plane():
    return gen_vertical_plane(0.3, 0.1, 2.0, 1 / 32, 1.0)


@pytest.fixture(scope="session")
def small_corner():
    return gen_corner(1.1, 1 / 32, 0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
