import numpy as np
import pytest

from smallscat.geometry import make_sphere_mesh


@pytest.fixture(scope="session")
def sphere2():
    return make_sphere_mesh(1.0, 2)


@pytest.fixture(scope="session")
def sphere3():
    return make_sphere_mesh(1.0, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
