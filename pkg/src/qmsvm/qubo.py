"""Binary encoding of the Crammer-Singer variables and the QUBO built from it.

Variable ``tau[n, c]`` is carried by ``B`` bits at flat positions
``n*C*B + c*B + b`` with bit ``b`` weighing ``2**b`` (LSB first), and decodes to
``-1 + 2 * sigma / (2**B - 1)`` where ``sigma`` is the encoded integer.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import Dataset
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class QmsvmParams:
    """Encoding width, regularization, penalty weight and pruning ratio.

    ``max_min_ratio=None`` disables pruning.
    """

    B: int = 2
    beta: float = 1.0
    mu: float = 1.0
    max_min_ratio: Optional[float] = 15.0

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise ConfigError(f"B must be a positive integer, got {self.B}")
        if not math.isfinite(self.beta):
            raise ConfigError(f"beta must be finite, got {self.beta}")
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ConfigError(f"mu must be finite and nonnegative, got {self.mu}")
        if self.max_min_ratio is not None and not self.max_min_ratio > 1:
            raise ConfigError(f"max_min_ratio must exceed 1, got {self.max_min_ratio}")


@dataclass(frozen=True)
class QuboProblem:
    """Upper-triangular QUBO stored as sorted ``(rows, cols, values)`` triplets."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    M: int = 0
    C: int = 0
    B: int = 0
    params: Optional[QmsvmParams] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        vals = np.asarray(self.values, dtype=np.float64).ravel()
        if not (rows.shape == cols.shape == vals.shape):
            raise DataError("rows, cols and values must have equal length")
        if self.dim < 1:
            raise DataError(f"QUBO dimension must be positive, got {self.dim}")
        if rows.size:
            if rows.min() < 0 or cols.max() >= self.dim:
                raise DataError(f"entry index outside [0, {self.dim})")
            if np.any(rows > cols):
                raise DataError("QUBO entries must satisfy i <= j")
        if not np.all(np.isfinite(vals)):
            raise DataError("QUBO contains non-finite coefficients")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        keys = rows * self.dim + cols
        if keys.size and np.any(keys[1:] == keys[:-1]):
            raise DataError("duplicate QUBO entry")
        for name, arr in (("rows", rows), ("cols", cols), ("values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_dense(cls, upper, **meta) -> "QuboProblem":
        """Keep the nonzero upper-triangular part of a square matrix."""
        upper = np.asarray(upper, dtype=np.float64)
        if upper.ndim != 2 or upper.shape[0] != upper.shape[1]:
            raise DataError("QUBO matrix must be square")
        i, j = np.nonzero(np.triu(upper))
        return cls(upper.shape[0], i, j, upper[i, j], **meta)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def dense(self) -> np.ndarray:
        q = np.zeros((self.dim, self.dim))
        q[self.rows, self.cols] = self.values
        return q

    def linear(self) -> np.ndarray:
        """Diagonal coefficients as a length-``dim`` vector."""
        if "linear" not in self._cache:
            h = np.zeros(self.dim)
            on = self.rows == self.cols
            h[self.rows[on]] = self.values[on]
            self._cache["linear"] = h
        return self._cache["linear"]

    def coupling(self) -> np.ndarray:
        """Dense symmetric off-diagonal coupling matrix (zero diagonal)."""
        if "coupling" not in self._cache:
            w = np.zeros((self.dim, self.dim))
            off = self.rows != self.cols
            w[self.rows[off], self.cols[off]] = self.values[off]
            w[self.cols[off], self.rows[off]] = self.values[off]
            self._cache["coupling"] = w
        return self._cache["coupling"]

    def csr(self):
        """``(indptr, indices, data)`` of the symmetric coupling, columns ascending."""
        if "csr" not in self._cache:
            w = self.coupling()
            mask = w != 0.0
            indptr = np.zeros(self.dim + 1, dtype=np.int64)
            indptr[1:] = np.cumsum(mask.sum(axis=1))
            i, j = np.nonzero(mask)
            self._cache["csr"] = (indptr, j.astype(np.int64), w[i, j].copy())
        return self._cache["csr"]

    def energy(self, bits) -> float:
        """Sum of ``bits[i] * Q[i, j] * bits[j]`` over stored entries, exactly rounded."""
        x = _as_bits(bits, self.dim)
        on = (x[self.rows] & x[self.cols]).astype(bool)
        return math.fsum(self.values[on].tolist())

    def energies(self, states) -> np.ndarray:
        states = np.asarray(states)
        if states.ndim != 2:
            raise DataError("states must be a 2-D array")
        return np.array([self.energy(s) for s in states])

    def to_text(self) -> str:
        lines = [f"qubo {self.dim} {self.M} {self.C} {self.B}"]
        lines.extend(
            f"{i} {j} {float(v)!r}"
            for i, j, v in zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist())
        )
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


def _as_bits(bits, dim) -> np.ndarray:
    x = np.asarray(bits).ravel()
    if x.shape[0] != dim:
        raise DataError(f"expected {dim} bits, got {x.shape[0]}")
    if x.size and not np.all((x == 0) | (x == 1)):
        raise DataError("bit values must be 0 or 1")
    return x.astype(np.uint8)


def parse_qubo(text: str, source: str = "<qubo>") -> QuboProblem:
    """Inverse of :meth:`QuboProblem.to_text`. Errors name the offending line."""
    header = None
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if header is None:
            if len(parts) != 5 or parts[0] != "qubo":
                raise DataError(f"{source}: line {lineno}: expected header 'qubo dim M C B'")
            try:
                header = [int(p) for p in parts[1:]]
            except ValueError:
                raise DataError(f"{source}: line {lineno}: non-integer header field") from None
            continue
        if len(parts) != 3:
            raise DataError(f"{source}: line {lineno}: expected 'i j value', got {s!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise DataError(f"{source}: line {lineno}: malformed triplet {s!r}") from None
        if not (0 <= i <= j < header[0]):
            raise DataError(f"{source}: line {lineno}: index pair ({i}, {j}) invalid for dim {header[0]}")
        if not math.isfinite(v):
            raise DataError(f"{source}: line {lineno}: non-finite value")
        rows.append(i)
        cols.append(j)
        vals.append(v)
    if header is None:
        raise DataError(f"{source}: empty QUBO file")
    dim, M, C, B = header
    try:
        return QuboProblem(dim, rows, cols, vals, M=M, C=C, B=B)
    except DataError as exc:
        raise DataError(f"{source}: {exc}") from None


def load_qubo(path) -> QuboProblem:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    return parse_qubo(path.read_text(encoding="utf-8"), str(path))


# ---------------------------------------------------------------------------
# encoding and the continuous objective
# ---------------------------------------------------------------------------


def grid(B: int) -> np.ndarray:
    """The 2**B values a B-bit variable can decode to, ascending."""
    levels = (1 << B) - 1
    return -1.0 + 2.0 * np.arange(levels + 1) / levels


def decode_bits(bits, M: int, C: int, B: int) -> np.ndarray:
    """Map a flat bitstring to the ``M x C`` matrix of decoded variables."""
    x = _as_bits(bits, M * C * B).reshape(M, C, B).astype(np.int64)
    sigma = x @ (1 << np.arange(B))
    return -1.0 + 2.0 * sigma / ((1 << B) - 1)


def encode_tau(tau, B: int) -> np.ndarray:
    """Nearest-grid-point bitstring for a matrix of values in [-1, 1]."""
    t = np.clip(np.asarray(tau, dtype=np.float64), -1.0, 1.0)
    levels = (1 << B) - 1
    sigma = np.rint((t + 1.0) * levels / 2.0).astype(np.int64)
    return ((sigma[..., None] >> np.arange(B)) & 1).astype(np.uint8).ravel()


def penalty(tau, labels) -> float:
    """Squared row-sum violation plus the wrong-class positivity term."""
    t = np.asarray(tau, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if t.ndim != 2 or y.shape != (t.shape[0],):
        raise DataError(f"tau shape {t.shape} does not match {y.shape[0]} labels")
    own = t[np.arange(t.shape[0]), y]
    return float((t.sum(axis=1) ** 2).sum() + (t.sum() - own.sum()))


def objective(tau, K_sub, labels, beta: float) -> float:
    """Crammer-Singer dual objective over the subset."""
    t = np.asarray(tau, dtype=np.float64)
    K = np.asarray(K_sub, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if K.shape != (t.shape[0], t.shape[0]) or y.shape != (t.shape[0],):
        raise DataError("shape mismatch between tau, kernel matrix and labels")
    quad = 0.5 * float((K * (t @ t.T)).sum())
    return quad - beta * float(t[np.arange(t.shape[0]), y].sum())


def full_energy(tau, K_sub, labels, beta: float, mu: float) -> float:
    """Objective plus weighted penalty, the function the QUBO encodes."""
    return objective(tau, K_sub, labels, beta) + mu * penalty(tau, labels)


# ---------------------------------------------------------------------------
# QUBO construction
# ---------------------------------------------------------------------------


def qubo_matrix_symmetric(K_sub, labels, C: int, p: QmsvmParams) -> np.ndarray:
    """Symmetric coefficient matrix before folding, constants dropped."""
    K = np.asarray(K_sub, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    M = K.shape[0]
    B = p.B
    levels = float((1 << B) - 1)
    dim = M * C * B
    flat = np.arange(dim)
    n_idx = flat // (C * B)
    c_idx = (flat // B) % C
    w = 2.0 ** (flat % B)
    ww = np.outer(w, w)

    q = (c_idx[:, None] == c_idx[None, :]) * (2.0 * ww / levels**2) * K[np.ix_(n_idx, n_idx)]
    q += (n_idx[:, None] == n_idx[None, :]) * (4.0 * p.mu * ww / levels**2)
    own = (c_idx == y[n_idx]).astype(np.float64)
    lin = (2.0 * w / levels) * (
        -K.sum(axis=1)[n_idx] - own * (p.beta + p.mu) - 2.0 * C * p.mu + p.mu
    )
    q[flat, flat] += lin
    return q


def fold_upper(q_sym) -> np.ndarray:
    """Upper-triangular form with the same quadratic form on binary vectors."""
    q = np.asarray(q_sym, dtype=np.float64)
    return np.triu(q + q.T, 1) + np.diag(np.diag(q))


def prune(upper, max_min_ratio: Optional[float]) -> np.ndarray:
    """Zero off-diagonal entries smaller than ``max|Q| / max_min_ratio``."""
    q = np.array(upper, dtype=np.float64)
    if max_min_ratio is None:
        return q
    threshold = np.abs(q).max() / max_min_ratio
    off = ~np.eye(q.shape[0], dtype=bool)
    q[off & (np.abs(q) < threshold)] = 0.0
    return q


def build_qubo(subset: Dataset, K_sub, p: QmsvmParams) -> QuboProblem:
    """QUBO whose energy differences match those of objective + mu * penalty."""
    K = np.asarray(K_sub, dtype=np.float64)
    M = subset.n_examples
    if K.shape != (M, M):
        raise DataError(f"kernel matrix shape {K.shape} does not match subset size {M}")
    if not np.all(np.isfinite(K)):
        raise DataError("kernel matrix contains non-finite values")
    C = subset.n_classes
    upper = prune(fold_upper(qubo_matrix_symmetric(K, subset.labels, C, p)), p.max_min_ratio)
    return QuboProblem.from_dense(upper, M=M, C=C, B=p.B, params=p)
