import numpy as np
import pytest

from qmsvm._accel import HAS_NUMBA
from qmsvm.data import Dataset
from qmsvm.kernel import KernelParams, kernel_matrix
from qmsvm.qubo import QmsvmParams, build_qubo

AVAILABLE_BACKENDS = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]


@pytest.fixture(params=AVAILABLE_BACKENDS)
def backend(request):
    return request.param


def random_instance(rng, M, C, B, beta=1.0, mu=1.0, gamma=1.0, ratio=None, F=2):
    X = rng.standard_normal((M, F))
    y = rng.integers(0, C, M)
    subset = Dataset(X, y, C)
    K = kernel_matrix(X, X, KernelParams(gamma))
    q = build_qubo(subset, K, QmsvmParams(B, beta, mu, ratio))
    return subset, K, q


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
