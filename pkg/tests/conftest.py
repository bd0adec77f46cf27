import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from ssat_cbf import model
from ssat_cbf.geometry import Cuboid


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def geometry():
    return model.default_geometry()


@pytest.fixture
def standing(geometry):
    return model.RobotState.standing(geometry).vector


@pytest.fixture
def random_cuboid(rng):
    def make(center_range=2.0):
        center = rng.uniform(-center_range, center_range, 3)
        extents = np.exp(rng.uniform(np.log(0.05), 0.0, 3))
        return Cuboid(center, Rotation.random(random_state=rng).as_matrix(), extents)
    return make


@pytest.fixture
def central_gradient():
    def gradient(f, x, eps=1e-6):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.size)
        for k in range(x.size):
            step = np.zeros(x.size)
            step[k] = eps
            out[k] = (f(x + step) - f(x - step)) / (2 * eps)
        return out
    return gradient


@pytest.fixture
def central_jacobian():
    def jacobian(f, x, eps=1e-6):
        x = np.asarray(x, dtype=float)
        columns = []
        for k in range(x.size):
            step = np.zeros(x.size)
            step[k] = eps
            columns.append((np.asarray(f(x + step)) - np.asarray(f(x - step))) / (2 * eps))
        return np.stack(columns, axis=-1)
    return jacobian
