"""QUBO samplers: exhaustive enumeration, simulated annealing and a remote service."""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import requests

from . import _kernels
from ._accel import resolve_backend
from .errors import ConfigError, EnergyMismatchWarning, ProtocolError, TransportError
from .qubo import QuboProblem

log = logging.getLogger(__name__)

EXACT_MAX_DIM = 24


@dataclass(frozen=True)
class SampleSet:
    """Distinct bitstrings with energies and occurrence counts.

    Rows are sorted by energy, ties broken by lexicographic bit order.
    """

    states: np.ndarray
    energies: np.ndarray
    occurrences: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_states(cls, q: QuboProblem, states, occurrences=None, info=None) -> "SampleSet":
        """Merge duplicate rows, recompute energies locally, sort."""
        states = np.asarray(states, dtype=np.uint8).reshape(-1, q.dim)
        if occurrences is None:
            occurrences = np.ones(states.shape[0], dtype=np.int64)
        occurrences = np.asarray(occurrences, dtype=np.int64)
        uniq, inverse = np.unique(states, axis=0, return_inverse=True)
        counts = np.bincount(inverse.ravel(), weights=occurrences, minlength=uniq.shape[0])
        energies = q.energies(uniq)
        keys = [uniq[:, k] for k in range(q.dim - 1, -1, -1)]
        order = np.lexsort(keys + [energies])
        return cls(uniq[order], energies[order], counts[order].astype(np.int64), dict(info or {}))

    def __len__(self):
        return self.states.shape[0]

    @property
    def num_reads(self) -> int:
        return int(self.occurrences.sum())

    @property
    def first(self):
        return self.states[0], float(self.energies[0])

    def lines(self):
        """``energy occurrences bits`` per sample, bits as a 0/1 string."""
        for s, e, k in zip(self.states, self.energies, self.occurrences):
            yield f"{format_number(e)} {int(k)} {''.join(map(str, s.tolist()))}"


def format_number(x) -> str:
    """Shortest round-trip text for a float, integral values without ``.0``."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


# ---------------------------------------------------------------------------
# exhaustive
# ---------------------------------------------------------------------------


def solve_exact(q: QuboProblem, backend=None, max_dim: int = EXACT_MAX_DIM) -> SampleSet:
    """All minimum-energy states of ``q`` by full enumeration."""
    if q.dim > max_dim:
        raise ConfigError(f"exact solver capacity is {max_dim} bits, problem has {q.dim}")
    scale = float(np.abs(q.values).sum())
    # loose screen on the fast path, then an exact-rounded recheck
    tol = 1e-9 * max(1.0, scale)
    if resolve_backend(backend) == "numba":
        indptr, indices, data = q.csr()
        codes = _kernels.exact_candidates_numba(q.linear(), indptr, indices, data, tol)
    else:
        codes = _kernels.exact_candidates_numpy(q.dense(), tol)
    states = ((codes[:, None] >> np.arange(q.dim)) & 1).astype(np.uint8)
    energies = q.energies(states)
    best = energies.min()
    keep = energies <= best + 1e-12 * max(1.0, abs(best))
    return SampleSet.from_states(q, states[keep], info={"sampler": "exact"})


# ---------------------------------------------------------------------------
# simulated annealing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnealConfig:
    """Simulated annealing settings.

    ``beta_hot``/``beta_cold`` left as ``None`` are tuned per problem so the
    median single-flip cost is accepted with probability 0.5 at the start
    and 1e-4 at the end.
    """

    num_reads: int = 1000
    sweeps: int = 100
    beta_hot: Optional[float] = None
    beta_cold: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ConfigError(f"num_reads must be positive, got {self.num_reads}")
        if self.sweeps < 1:
            raise ConfigError(f"sweeps must be positive, got {self.sweeps}")
        hot, cold = self.beta_hot, self.beta_cold
        if hot is not None and not hot > 0:
            raise ConfigError(f"beta_hot must be positive, got {hot}")
        if cold is not None and hot is not None and not cold > hot:
            raise ConfigError(f"beta_cold ({cold}) must exceed beta_hot ({hot})")


def flip_cost_sample(q: QuboProblem, n_states: int = 64, seed: int = 0) -> np.ndarray:
    """Nonzero |energy change| of every single flip from random states."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF))
    x = rng.integers(0, 2, size=(n_states, q.dim)).astype(np.float64)
    field_ = q.linear()[None, :] + x @ q.coupling()
    de = np.abs((1.0 - 2.0 * x) * field_).ravel()
    return de[de > 0]


def auto_beta_range(q: QuboProblem, seed: int = 0):
    de = flip_cost_sample(q, seed=seed)
    if de.size == 0:
        return 1.0, 10.0
    med = float(np.median(de))
    return math.log(2.0) / med, math.log(1e4) / med


def beta_schedule(beta_hot: float, beta_cold: float, sweeps: int) -> np.ndarray:
    """Geometric interpolation of inverse temperature, one value per sweep."""
    if sweeps == 1:
        return np.array([beta_cold])
    return beta_hot * (beta_cold / beta_hot) ** (np.arange(sweeps) / (sweeps - 1))


def anneal_states(q: QuboProblem, cfg: AnnealConfig, backend=None) -> np.ndarray:
    """Raw final states, one row per read, before merging."""
    hot, cold = cfg.beta_hot, cfg.beta_cold
    if hot is None or cold is None:
        auto_hot, auto_cold = auto_beta_range(q, cfg.seed)
        hot = auto_hot if hot is None else hot
        cold = auto_cold if cold is None else cold
        if not cold > hot:
            raise ConfigError(f"beta_cold ({cold}) must exceed beta_hot ({hot})")
    betas = beta_schedule(hot, cold, cfg.sweeps)
    keys, init_keys = _kernels.read_keys(cfg.seed, cfg.num_reads)
    if resolve_backend(backend) == "numba":
        indptr, indices, data = q.csr()
        return _kernels.anneal_numba(q.linear(), indptr, indices, data, betas, keys, init_keys)
    return _kernels.anneal_numpy(q.linear(), q.coupling(), betas, keys, init_keys)


def solve_sa(q: QuboProblem, cfg: AnnealConfig = AnnealConfig(), backend=None) -> SampleSet:
    """Independent Metropolis annealing runs merged into a sample set."""
    states = anneal_states(q, cfg, backend)
    return SampleSet.from_states(q, states, info={"sampler": "sa", "sweeps": cfg.sweeps})


# ---------------------------------------------------------------------------
# remote service
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RemoteConfig:
    """Endpoint of a JSON sampling service.

    ``passthrough`` is forwarded verbatim (e.g. chain_strength,
    annealing_time).
    """

    endpoint: str
    timeout: float = 60.0
    passthrough: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.timeout > 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if not self.endpoint:
            raise ConfigError("remote endpoint is empty")


def remote_request(q: QuboProblem, num_reads: int, passthrough=None) -> dict:
    return {
        "dim": int(q.dim),
        "entries": [
            [i, j, v] for i, j, v in zip(q.rows.tolist(), q.cols.tolist(), q.values.tolist())
        ],
        "num_reads": int(num_reads),
        "passthrough": dict(passthrough or {}),
    }


def parse_remote_response(q: QuboProblem, payload, rel_tol: float = 1e-6) -> SampleSet:
    """Validate a service response and re-energize its samples locally."""
    if not isinstance(payload, dict) or not isinstance(payload.get("samples"), list):
        raise ProtocolError("response lacks a 'samples' list")
    if not payload["samples"]:
        raise ProtocolError("response contains no samples")
    states, occ, reported = [], [], []
    for k, item in enumerate(payload["samples"]):
        if not isinstance(item, dict):
            raise ProtocolError(f"sample {k} is not an object")
        bits = item.get("bits")
        if not isinstance(bits, list) or len(bits) != q.dim:
            raise ProtocolError(f"sample {k}: expected {q.dim} bits")
        if any(b not in (0, 1) or isinstance(b, bool) for b in bits):
            raise ProtocolError(f"sample {k}: bits must be 0 or 1")
        count = item.get("occurrences", 1)
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise ProtocolError(f"sample {k}: occurrences must be a positive integer")
        energy = item.get("energy")
        if energy is not None and (isinstance(energy, bool) or not isinstance(energy, (int, float))):
            raise ProtocolError(f"sample {k}: energy must be a number")
        states.append(bits)
        occ.append(count)
        reported.append(energy)
    mismatches = 0
    for bits, energy in zip(states, reported):
        if energy is None:
            continue
        local = q.energy(bits)
        if abs(energy - local) > rel_tol * max(1.0, abs(local)):
            mismatches += 1
            warnings.warn(
                f"remote energy {energy!r} disagrees with local {local!r}; keeping local value",
                EnergyMismatchWarning,
                stacklevel=3,
            )
    return SampleSet.from_states(
        q, np.array(states, dtype=np.uint8), occ, info={"sampler": "remote", "energy_mismatches": mismatches}
    )


def solve_remote(q: QuboProblem, cfg: RemoteConfig, num_reads: int = 1000, session=None) -> SampleSet:
    """POST the problem to ``cfg.endpoint`` and normalize the answer."""
    if num_reads < 1:
        raise ConfigError(f"num_reads must be positive, got {num_reads}")
    http = session or requests
    body = remote_request(q, num_reads, cfg.passthrough)
    log.debug("posting %d-bit QUBO to %s", q.dim, cfg.endpoint)
    try:
        resp = http.post(cfg.endpoint, json=body, timeout=cfg.timeout)
    except requests.RequestException as exc:
        raise TransportError(f"request to {cfg.endpoint} failed: {exc}") from exc
    if not 200 <= resp.status_code < 300:
        raise TransportError(f"{cfg.endpoint} answered HTTP {resp.status_code}")
    try:
        payload = resp.json()
    except ValueError as exc:
        raise ProtocolError(f"response is not valid JSON: {exc}") from exc
    return parse_remote_response(q, payload)
