import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_instance
from qmsvm._accel import HAS_NUMBA, resolve_backend
from qmsvm.kernel import KernelParams, kernel_matrix
from qmsvm.sampler import AnnealConfig, anneal_states, solve_exact

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")


def test_resolve():
    assert resolve_backend("numpy") == "numpy"
    with pytest.raises(ValueError):
        resolve_backend("cuda")


@needs_numba
def test_kernel_matrix_agrees():
    rng = np.random.default_rng(0)
    A, B = rng.standard_normal((300, 4)), rng.standard_normal((17, 4))
    a = kernel_matrix(A, B, KernelParams(0.3), backend="numba")
    b = kernel_matrix(A, B, KernelParams(0.3), backend="numpy")
    np.testing.assert_allclose(a, b, rtol=1e-15, atol=0)


@needs_numba
@pytest.mark.parametrize("seed", range(3))
def test_anneal_identical(seed):
    rng = np.random.default_rng(seed)
    _, _, q = random_instance(rng, 4, 3, 2, ratio=15.0)
    cfg = AnnealConfig(num_reads=64, sweeps=40, seed=seed)
    np.testing.assert_array_equal(anneal_states(q, cfg, "numba"), anneal_states(q, cfg, "numpy"))


@needs_numba
@pytest.mark.parametrize("shape", [(1, 2, 1), (2, 3, 2), (3, 2, 3)])
def test_exact_identical(shape, rng):
    _, _, q = random_instance(rng, *shape, ratio=15.0)
    a, b = solve_exact(q, backend="numba"), solve_exact(q, backend="numpy")
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.energies, b.energies)


def test_env_flag_forces_numpy():
    code = (
        "import qmsvm._accel as a, numpy as np;"
        "from qmsvm.sampler import solve_exact;from qmsvm.qubo import QuboProblem;"
        "assert not a.HAS_NUMBA and a.DEFAULT_BACKEND == 'numpy';"
        "print(solve_exact(QuboProblem(1,[0],[0],[-2.0])).energies[0])"
    )
    env = dict(os.environ, QMSVM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "-2.0"
