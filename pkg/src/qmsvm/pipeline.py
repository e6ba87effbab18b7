"""End-to-end training: selection, QUBO, sampling, combination."""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .data import Dataset, MinMaxScaler
from .errors import ConfigError, QmsvmError
from .kernel import KernelCounter, KernelParams, kernel_matrix
from .model import (
    CombineConfig,
    TrainedModel,
    argmax_classes,
    combine,
    predict,
    rank_solutions,
    scores_from_kernel,
    solution_accuracies,
)
from .qubo import QmsvmParams, build_qubo
from .sampler import (
    EXACT_MAX_DIM,
    AnnealConfig,
    RemoteConfig,
    SampleSet,
    solve_exact,
    solve_remote,
    solve_sa,
)
from .selection import SelectionConfig, check_feasible, select

log = logging.getLogger(__name__)

PHASES = ("selection", "sampling", "combination", "inference")
SAMPLERS = ("auto", "exact", "sa", "remote")
AUTO_EXACT_MAX_DIM = 20


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a training run. Defaults reproduce the reference setup."""

    C: int = 3
    B: int = 2
    beta: float = 1.0
    mu: float = 1.0
    gamma: float = 1.0
    n_cap: Optional[int] = None
    M: int = 60
    num_reads: int = 1000
    S: int = 100
    multiplier: float = 10.0
    max_min_ratio: Optional[float] = 15.0
    sampler: str = "sa"
    selection: str = "random"
    seed: int = 0
    sweeps: int = 100
    beta_hot: Optional[float] = None
    beta_cold: Optional[float] = None
    normalize: bool = False
    dedup: bool = False
    threshold: Optional[float] = None
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6
    remote_endpoint: Optional[str] = None
    remote_timeout: float = 60.0
    remote_passthrough: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.sampler!r}; expected one of {SAMPLERS}")
        if self.C < 1:
            raise ConfigError(f"C must be positive, got {self.C}")
        if self.n_cap is not None and self.n_cap < 1:
            raise ConfigError(f"N cap must be positive, got {self.n_cap}")
        if self.sampler == "remote" and not self.remote_endpoint:
            raise ConfigError("remote sampler needs --remote-endpoint")
        # constructing the sub-configs validates their fields
        self.qmsvm_params()
        self.selection_config()
        self.combine_config()
        self.anneal_config()
        check_feasible(self.selection_config(), self.C)
        if self.resolved_sampler() == "exact" and self.dim > EXACT_MAX_DIM:
            raise ConfigError(
                f"exact sampler capacity is {EXACT_MAX_DIM} bits, M*C*B = {self.dim}"
            )

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @property
    def dim(self) -> int:
        return self.M * self.C * self.B

    def resolved_sampler(self) -> str:
        if self.sampler == "auto":
            return "exact" if self.dim <= AUTO_EXACT_MAX_DIM else "sa"
        return self.sampler

    def seeds(self):
        """Independent seeds for selection, annealing and N-capping."""
        ss = np.random.SeedSequence(int(self.seed) & 0xFFFFFFFFFFFFFFFF)
        return [int(v) for v in ss.generate_state(3, dtype=np.uint64)]

    def qmsvm_params(self) -> QmsvmParams:
        return QmsvmParams(self.B, self.beta, self.mu, self.max_min_ratio)

    def selection_config(self) -> SelectionConfig:
        return SelectionConfig(
            self.selection, self.M, self.seeds()[0], self.kmeans_max_iter, self.kmeans_tol
        )

    def anneal_config(self) -> AnnealConfig:
        return AnnealConfig(self.num_reads, self.sweeps, self.beta_hot, self.beta_cold, self.seeds()[1])

    def combine_config(self) -> CombineConfig:
        if self.threshold is None:
            return CombineConfig(self.S, self.multiplier, dedup=self.dedup)
        return CombineConfig(self.S, self.multiplier, "fixed", self.threshold, self.dedup)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


@dataclass
class TrainResult:
    model: TrainedModel
    subset: Dataset
    sample_set: SampleSet
    accuracies: np.ndarray
    weights: np.ndarray
    combined_accuracy: float
    seconds: dict
    kernel_evals: dict

    @property
    def best_single_accuracy(self) -> float:
        return float(self.accuracies.max())


@contextmanager
def phase_context(name):
    """Prefix errors raised inside a pipeline phase with the phase name."""
    try:
        yield
    except QmsvmError as exc:
        if exc.args and isinstance(exc.args[0], str):
            exc.args = (f"{name}: {exc.args[0]}",) + exc.args[1:]
        raise


def sample(q, cfg: RunConfig, backend=None) -> SampleSet:
    kind = cfg.resolved_sampler()
    if kind == "exact":
        return solve_exact(q, backend=backend)
    if kind == "remote":
        remote = RemoteConfig(cfg.remote_endpoint, cfg.remote_timeout, dict(cfg.remote_passthrough))
        return solve_remote(q, remote, cfg.num_reads)
    return solve_sa(q, cfg.anneal_config(), backend=backend)


def cap_examples(d: Dataset, cfg: RunConfig) -> Dataset:
    if cfg.n_cap is None or d.n_examples <= cfg.n_cap:
        return d
    rng = np.random.default_rng(cfg.seeds()[2])
    return d.subset(np.sort(rng.choice(d.n_examples, cfg.n_cap, replace=False)))


def train(
    train_set: Dataset,
    cfg: RunConfig = RunConfig(),
    val: Optional[Dataset] = None,
    backend=None,
) -> TrainResult:
    """Fit a classifier; ``val`` defaults to the (capped) training set."""
    if train_set.n_classes != cfg.C:
        raise ConfigError(f"dataset has {train_set.n_classes} classes, configuration says C={cfg.C}")
    if cfg.M > train_set.n_examples:
        raise ConfigError(f"cannot select M={cfg.M} examples from N={train_set.n_examples}")
    seconds = dict.fromkeys(PHASES[:3], 0.0)
    counters = {phase: KernelCounter() for phase in PHASES[:3]}

    t0 = time.perf_counter()
    with phase_context("selection"):
        data = cap_examples(train_set, cfg)
        scaler = MinMaxScaler.fit(data.features) if cfg.normalize else None
        if scaler is not None:
            data = scaler.apply(data)
            val = scaler.apply(val) if val is not None else None
        val = data if val is None else val
        subset = select(data, cfg.selection_config())
    seconds["selection"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with phase_context("sampling"):
        K_sub = kernel_matrix(
            subset.features, subset.features, KernelParams(cfg.gamma), counters["sampling"], backend
        )
        q = build_qubo(subset, K_sub, cfg.qmsvm_params())
        ss = sample(q, cfg, backend)
    seconds["sampling"] = time.perf_counter() - t0
    log.info("sampled %d distinct states, best energy %.6g", len(ss), ss.energies[0])

    t0 = time.perf_counter()
    with phase_context("combination"):
        ccfg = cfg.combine_config()
        solutions = rank_solutions(ss, ccfg.S, subset.n_examples, cfg.C, cfg.B, ccfg.dedup)
        acc = solution_accuracies(solutions, subset, val, cfg.gamma, counters["combination"], backend)
        tau_bar, weights = combine(solutions, acc, ccfg)
    seconds["combination"] = time.perf_counter() - t0

    model = TrainedModel(subset.features, tau_bar, cfg.gamma, cfg.C, scaler)
    # reporting only, so this kernel matrix is not charged to any phase
    K_val = kernel_matrix(val.features, subset.features, KernelParams(cfg.gamma), backend=backend)
    combined = float(np.mean(argmax_classes(scores_from_kernel(K_val, tau_bar)) == val.labels))
    return TrainResult(
        model,
        subset,
        ss,
        acc,
        weights,
        combined,
        seconds,
        {k: c.evals for k, c in counters.items()},
    )


def timed_predict(model: TrainedModel, X, backend=None):
    """``(predictions, seconds, kernel_evals)`` for one inference pass."""
    counter = KernelCounter()
    t0 = time.perf_counter()
    pred = predict(model, X, counter, backend)
    return pred, time.perf_counter() - t0, counter.evals
