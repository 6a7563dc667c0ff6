import numpy as np
import pytest

from amplitude_pr import make_ensemble, sample_matrix


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gaussian():
    return make_ensemble("complex-gaussian")


@pytest.fixture
def small_problem(gaussian):
    """Noiseless complex-gaussian instance, m=128, d=8."""
    A = sample_matrix(gaussian, 128, 8, 3)
    r = np.random.default_rng(4)
    x0 = crandn(r, 8)
    x0 /= np.linalg.norm(x0)
    return A, x0, np.abs(A.forward(x0))
