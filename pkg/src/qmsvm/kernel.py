"""Gaussian (RBF) kernel with an evaluation counter."""

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._accel import resolve_backend
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class KernelParams:
    gamma: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ConfigError(f"gamma must be positive and finite, got {self.gamma}")


class KernelCounter:
    """Running count of scalar kernel evaluations; safe to share across threads."""

    def __init__(self):
        self._evals = 0
        self._lock = threading.Lock()

    @property
    def evals(self) -> int:
        return self._evals

    def add(self, n: int) -> None:
        with self._lock:
            self._evals += int(n)

    def __repr__(self):
        return f"KernelCounter(evals={self._evals})"


def kernel(x1, x2, p: KernelParams, counter: KernelCounter = None) -> float:
    """exp(-gamma * ||x1 - x2||^2)."""
    a = np.asarray(x1, dtype=np.float64).ravel()
    b = np.asarray(x2, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    s = 0.0
    for u, v in zip(a.tolist(), b.tolist()):
        d = u - v
        s += d * d
    if counter is not None:
        counter.add(1)
    return math.exp(-p.gamma * s)


def kernel_matrix(A, B, p: KernelParams, counter: KernelCounter = None, backend=None) -> np.ndarray:
    """Matrix of kernel values between the rows of ``A`` and ``B``."""
    a = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(B, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DataError("kernel_matrix expects two 2-D matrices")
    if a.shape[1] != b.shape[1]:
        raise DataError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]} features")
    if resolve_backend(backend) == "numba":
        out = _kernels.kernel_matrix_numba(a, b, float(p.gamma))
    else:
        out = _kernels.kernel_matrix_numpy(a, b, float(p.gamma))
    if counter is not None:
        counter.add(a.shape[0] * b.shape[0])
    return out
