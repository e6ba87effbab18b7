"""Hot numeric loops, each with a numba path and a pure-numpy path.

Both paths consume the same counter-based random stream (a splitmix64 hash of
``(read key, draw counter)``), so for a fixed seed they visit the same states.
The public modules dispatch through :func:`qmsvm._accel.resolve_backend`.
"""

import math

import numpy as np

from ._accel import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INIT_SALT = np.uint64(0xD1B54A32D192ED03)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0

# row-block budget for the numpy kernel matrix (entries per block)
_BLOCK_ENTRIES = 1 << 22


# ---------------------------------------------------------------------------
# counter-based random stream
# ---------------------------------------------------------------------------


def mix_array(z):
    """splitmix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def read_keys(seed, num_reads):
    """Per-read stream keys derived from ``(seed, read index)``.

    Returns ``(sweep_keys, init_keys)``, two uint64 arrays of length
    ``num_reads``.
    """
    seed_u = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    idx = np.arange(1, num_reads + 1, dtype=np.uint64)
    keys = mix_array(seed_u ^ mix_array(idx))
    init_keys = mix_array(keys ^ _INIT_SALT)
    return keys, init_keys


def uniform_array(keys, counter):
    """Uniform [0, 1) draw number ``counter`` for every key in ``keys``."""
    c = np.uint64(counter) + _ONE
    with np.errstate(over="ignore"):
        z = mix_array(keys + c * _GOLDEN)
    return (z >> _S11).astype(np.float64) * _INV53


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def _uniform(key, counter):
    z = _mix(key + (np.uint64(counter) + _ONE) * _GOLDEN)
    return np.float64(z >> _S11) * _INV53


# ---------------------------------------------------------------------------
# Gaussian kernel matrix
# ---------------------------------------------------------------------------


@njit(cache=True)
def kernel_matrix_numba(A, B, gamma):
    na, nb, nf = A.shape[0], B.shape[0], A.shape[1]
    out = np.empty((na, nb))
    for i in range(na):
        for j in range(nb):
            s = 0.0
            for f in range(nf):
                d = A[i, f] - B[j, f]
                s += d * d
            out[i, j] = math.exp(-gamma * s)
    return out


def kernel_matrix_numpy(A, B, gamma):
    na, nb = A.shape[0], B.shape[0]
    out = np.empty((na, nb))
    step = max(1, _BLOCK_ENTRIES // max(nb, 1))
    for start in range(0, na, step):
        block = A[start : start + step]
        s = np.zeros((block.shape[0], nb))
        # feature-by-feature accumulation keeps the same summation order
        # as the compiled loop
        for f in range(A.shape[1]):
            d = block[:, f, None] - B[None, :, f]
            s += d * d
        out[start : start + step] = np.exp(-gamma * s)
    return out


# ---------------------------------------------------------------------------
# simulated annealing
# ---------------------------------------------------------------------------


@njit(cache=True)
def anneal_numba(diag, indptr, indices, data, betas, keys, init_keys):
    """Single-bit Metropolis sweeps, one independent run per key.

    ``diag`` holds the linear terms, ``(indptr, indices, data)`` the
    symmetric off-diagonal couplings in CSR form.
    """
    n_reads = keys.shape[0]
    n = diag.shape[0]
    n_sweeps = betas.shape[0]
    states = np.zeros((n_reads, n), dtype=np.uint8)
    field = np.empty(n)
    for r in range(n_reads):
        x = states[r]
        for i in range(n):
            if _uniform(init_keys[r], i) < 0.5:
                x[i] = 1
        for i in range(n):
            f = diag[i]
            for p in range(indptr[i], indptr[i + 1]):
                if x[indices[p]] == 1:
                    f += data[p]
            field[i] = f
        key = keys[r]
        for s in range(n_sweeps):
            beta = betas[s]
            base = s * n
            for i in range(n):
                if x[i] == 1:
                    de = -field[i]
                else:
                    de = field[i]
                if de > 0.0:
                    if _uniform(key, base + i) >= math.exp(-beta * de):
                        continue
                d = 1.0 - 2.0 * x[i]
                x[i] = 1 - x[i]
                for p in range(indptr[i], indptr[i + 1]):
                    field[indices[p]] += d * data[p]
    return states


def anneal_numpy(diag, coupling, betas, keys, init_keys):
    """Vectorized-over-reads twin of :func:`anneal_numba`.

    ``coupling`` is the dense symmetric off-diagonal matrix.
    """
    n_reads = keys.shape[0]
    n = diag.shape[0]
    x = np.empty((n_reads, n), dtype=np.float64)
    for i in range(n):
        x[:, i] = uniform_array(init_keys, i) < 0.5
    field = np.tile(diag, (n_reads, 1))
    for j in range(n):
        field += x[:, j, None] * coupling[j][None, :]
    for s, beta in enumerate(betas):
        base = s * n
        for i in range(n):
            xi = x[:, i]
            de = np.where(xi == 1.0, -field[:, i], field[:, i])
            u = uniform_array(keys, base + i)
            accept = (de <= 0.0) | (u < np.exp(-beta * np.maximum(de, 0.0)))
            if not accept.any():
                continue
            d = np.where(accept, 1.0 - 2.0 * xi, 0.0)
            x[:, i] = np.where(accept, 1.0 - xi, xi)
            rows = np.flatnonzero(accept)
            field[rows] += d[rows, None] * coupling[i][None, :]
    return x.astype(np.uint8)


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------


@njit(cache=True)
def _gray_walk(diag, indptr, indices, data, tol, emin, out):
    """Walk all states in Gray-code order.

    With ``out`` empty, returns the minimum energy seen. Otherwise records the
    integer codes of states within ``tol`` of ``emin`` into ``out`` and
    returns how many there were (as a float).
    """
    n = diag.shape[0]
    x = np.zeros(n, dtype=np.uint8)
    field = diag.copy()
    energy = 0.0
    best = 0.0
    count = 0
    collect = out.shape[0] > 0
    limit = emin + tol
    if collect and energy <= limit:
        out[0] = 0
        count = 1
    total = np.int64(1) << n
    for k in range(1, total):
        i = 0
        while (k >> i) & 1 == 0:
            i += 1
        if x[i] == 1:
            energy -= field[i]
            d = -1.0
            x[i] = 0
        else:
            energy += field[i]
            d = 1.0
            x[i] = 1
        for p in range(indptr[i], indptr[i + 1]):
            field[indices[p]] += d * data[p]
        if collect:
            if energy <= limit:
                if count < out.shape[0]:
                    out[count] = k ^ (k >> 1)
                count += 1
        elif energy < best:
            best = energy
    if collect:
        return float(count)
    return best


def exact_candidates_numba(diag, indptr, indices, data, tol):
    """Integer codes of all states within ``tol`` of the minimum energy."""
    empty = np.zeros(0, dtype=np.int64)
    emin = _gray_walk(diag, indptr, indices, data, tol, 0.0, empty)
    probe = np.zeros(1 << 12, dtype=np.int64)
    count = int(_gray_walk(diag, indptr, indices, data, tol, emin, probe))
    if count <= probe.shape[0]:
        return probe[:count]
    out = np.zeros(count, dtype=np.int64)
    _gray_walk(diag, indptr, indices, data, tol, emin, out)
    return out


def _all_bits(n):
    codes = np.arange(1 << n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(np.float64)


def exact_candidates_numpy(upper, tol):
    """Meet-in-the-middle twin of :func:`exact_candidates_numba`.

    ``upper`` is the dense upper-triangular QUBO matrix.
    """
    n = upper.shape[0]
    low = n // 2
    high = n - low
    xl = _all_bits(low)
    xh = _all_bits(high)
    q_ll = upper[:low, :low]
    q_hh = upper[low:, low:]
    q_lh = upper[:low, low:]
    e_low = np.einsum("ai,ij,aj->a", xl, q_ll, xl)
    e_high = np.einsum("bi,ij,bj->b", xh, q_hh, xh)
    cross = xl @ q_lh
    step = max(1, _BLOCK_ENTRIES // xl.shape[0])
    best = np.inf
    kept_codes = []
    kept_energies = []
    for start in range(0, xh.shape[0], step):
        block = xh[start : start + step]
        e = e_low[:, None] + e_high[None, start : start + step] + cross @ block.T
        m = e.min()
        best = min(best, m)
        a, b = np.nonzero(e <= m + tol)
        kept_codes.append(a + ((b + start) << low))
        kept_energies.append(e[a, b])
    codes = np.concatenate(kept_codes)
    energies = np.concatenate(kept_energies)
    return codes[energies <= best + tol].astype(np.int64)
