import numpy as np
import pytest

from skewnet.algebra import Quaternion


def rand_quat(rng, imaginary=False, unit=False):
    v = rng.normal(size=4)
    if imaginary:
        v[0] = 0.0
    if unit:
        v /= np.linalg.norm(v)
    return Quaternion(*v)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
