import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qmsvm.errors import ConfigError, DataError
from qmsvm.kernel import KernelCounter, KernelParams, kernel, kernel_matrix


def test_identical_points():
    assert kernel([1.5, -2.0], [1.5, -2.0], KernelParams(3.0)) == 1.0


def test_unit_distance():
    assert kernel([0, 0], [1, 0], KernelParams(1.0)) == pytest.approx(0.36787944, abs=1e-8)


def test_half_gamma():
    assert kernel([0, 0], [1, 1], KernelParams(0.5)) == pytest.approx(math.exp(-1), rel=1e-15)


def test_dimension_mismatch():
    with pytest.raises(DataError):
        kernel([0, 0], [0, 0, 0], KernelParams())
    with pytest.raises(DataError):
        kernel_matrix(np.zeros((2, 2)), np.zeros((2, 3)), KernelParams())


def test_bad_gamma():
    for g in (0.0, -1.0, float("inf")):
        with pytest.raises(ConfigError):
            KernelParams(g)


def test_counter():
    c = KernelCounter()
    kernel([0], [1], KernelParams(), c)
    kernel_matrix(np.zeros((4, 2)), np.zeros((5, 2)), KernelParams(), c)
    assert c.evals == 21


def test_single_row(backend):
    np.testing.assert_array_equal(kernel_matrix([[0.3, 0.1]], [[0.3, 0.1]], KernelParams(), backend=backend), [[1.0]])


def test_matches_scalar_loop(backend):
    A = np.array([[0.0], [1.5]])
    B = np.array([[0.5], [-1.0], [2.0]])
    p = KernelParams(0.7)
    oracle = np.array([[kernel(a, b, p) for b in B] for a in A])
    K = kernel_matrix(A, B, p, backend=backend)
    assert K.shape == (2, 3)
    np.testing.assert_allclose(K, oracle, rtol=1e-15)


def test_three_rows_symmetric(backend):
    A = np.array([[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]])
    K = kernel_matrix(A, A, KernelParams(), backend=backend)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_array_equal(np.diag(K), 1.0)


finite = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=finite), st.floats(0.01, 5))
def test_symmetry_and_range(x, y, g):
    p = KernelParams(g)
    assert kernel(x, y, p) == kernel(y, x, p)
    assert 0.0 <= kernel(x, y, p) <= 1.0


@pytest.mark.parametrize("seed", range(5))
def test_psd(seed, backend):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((10, 3))
    K = kernel_matrix(A, A, KernelParams(0.5), backend=backend)
    assert np.linalg.eigvalsh(K).min() >= -1e-8
