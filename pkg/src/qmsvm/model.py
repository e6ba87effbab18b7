"""From a sample set to a classifier: ranking, weighting, combination, prediction."""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .data import Dataset, MinMaxScaler
from .errors import ConfigError, DataError
from .kernel import KernelCounter, KernelParams, kernel_matrix
from .qubo import decode_bits
from .sampler import SampleSet

MODEL_MAGIC = "qmsvm-model"
MODEL_VERSION = "v1"


@dataclass(frozen=True)
class CombineConfig:
    """How many solutions to keep and how to weight them.

    ``threshold_mode`` is ``"blend"`` (0.2 * min + 0.8 * max accuracy)
    or ``"fixed"``, in which case ``threshold`` is used as given.
    """

    S: int = 100
    multiplier: float = 10.0
    threshold_mode: str = "blend"
    threshold: Optional[float] = None
    dedup: bool = False

    def __post_init__(self):
        if self.S < 1:
            raise ConfigError(f"S must be positive, got {self.S}")
        if not math.isfinite(self.multiplier):
            raise ConfigError("multiplier must be finite")
        if self.threshold_mode not in ("blend", "fixed"):
            raise ConfigError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.threshold_mode == "fixed" and self.threshold is None:
            raise ConfigError("fixed threshold mode needs a threshold value")


@dataclass(frozen=True)
class TrainedModel:
    support: np.ndarray
    tau_bar: np.ndarray
    gamma: float
    n_classes: int
    scaler: Optional[MinMaxScaler] = None
    version: str = MODEL_VERSION

    def __post_init__(self):
        support = np.array(self.support, dtype=np.float64)
        tau = np.array(self.tau_bar, dtype=np.float64)
        if support.ndim != 2 or tau.ndim != 2:
            raise DataError("support and tau_bar must be matrices")
        if tau.shape != (support.shape[0], self.n_classes):
            raise DataError(
                f"tau_bar shape {tau.shape} inconsistent with {support.shape[0]} supports "
                f"and {self.n_classes} classes"
            )
        if not np.all(np.isfinite(tau)):
            raise DataError("tau_bar has non-finite entries")
        KernelParams(self.gamma)
        support.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "tau_bar", tau)

    @property
    def n_features(self) -> int:
        return self.support.shape[1]


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


def argmax_classes(scores) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. ties go to the smallest class
    return np.argmax(scores, axis=1)


def scores_from_kernel(K_cross, tau) -> np.ndarray:
    """Per-class decision scores given the (queries x supports) kernel matrix."""
    return np.asarray(K_cross) @ np.asarray(tau)


def rank_solutions(ss: SampleSet, S: int, M: int, C: int, B: int, dedup: bool = False) -> List[np.ndarray]:
    """Decode the ``S`` lowest-energy reads.

    Repeated reads of the same bitstring count separately unless ``dedup``.
    """
    if len(ss) == 0:
        raise DataError("sample set is empty")
    if S < 1:
        raise ConfigError(f"S must be positive, got {S}")
    picked = []
    for state, count in zip(ss.states, ss.occurrences):
        reps = 1 if dedup else int(count)
        for _ in range(min(reps, S - len(picked))):
            picked.append(state)
        if len(picked) >= S:
            break
    decoded = {}
    out = []
    for state in picked:
        key = state.tobytes()
        if key not in decoded:
            decoded[key] = decode_bits(state, M, C, B)
        out.append(decoded[key])
    return out


def solution_accuracies(
    solutions: Sequence[np.ndarray],
    subset: Dataset,
    val: Dataset,
    gamma: float,
    counter: KernelCounter = None,
    backend=None,
) -> np.ndarray:
    """Accuracy on ``val`` of the classifier defined by each solution.

    One shared (N x M) kernel matrix serves every solution.
    """
    if val.n_features != subset.n_features:
        raise DataError("validation and subset feature counts differ")
    K = kernel_matrix(val.features, subset.features, KernelParams(gamma), counter, backend)
    return np.array(
        [float(np.mean(argmax_classes(scores_from_kernel(K, t)) == val.labels)) for t in solutions]
    )


def validation_accuracy(tau, subset: Dataset, val: Dataset, gamma: float, counter: KernelCounter = None) -> float:
    return float(solution_accuracies([tau], subset, val, gamma, counter)[0])


def threshold_for(accuracies, cfg: CombineConfig) -> float:
    acc = np.asarray(accuracies, dtype=np.float64)
    if cfg.threshold_mode == "fixed":
        return float(cfg.threshold)
    top = float(acc.max())
    # rounding can push the blend above the maximum when all accuracies agree
    return min(0.2 * float(acc.min()) + 0.8 * top, top)


def combination_weights(accuracies, cfg: CombineConfig) -> np.ndarray:
    """Softmax of ``multiplier * accuracy`` over survivors; discarded get exactly 0."""
    acc = np.asarray(accuracies, dtype=np.float64)
    if acc.size == 0:
        raise DataError("no accuracies to combine")
    keep = acc >= threshold_for(acc, cfg)
    weights = np.zeros_like(acc)
    if not keep.any():
        return weights
    z = cfg.multiplier * acc[keep]
    e = np.exp(z - z.max())
    weights[keep] = e / e.sum()
    return weights


def combine(solutions: Sequence[np.ndarray], accuracies, cfg: CombineConfig = CombineConfig()):
    """Weighted average of the solutions, including the leading 1/S factor.

    Returns ``(tau_bar, weights)``.
    """
    if len(solutions) == 0:
        raise DataError("no solutions to combine")
    if len(solutions) != len(accuracies):
        raise DataError(f"{len(solutions)} solutions but {len(accuracies)} accuracies")
    weights = combination_weights(accuracies, cfg)
    stack = np.stack([np.asarray(t, dtype=np.float64) for t in solutions])
    tau_bar = np.tensordot(weights, stack, axes=1) / len(solutions)
    return tau_bar, weights


def decision_scores(m: TrainedModel, X, counter: KernelCounter = None, backend=None) -> np.ndarray:
    x = np.asarray(X, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != m.n_features:
        raise DataError(f"model expects {m.n_features} features, input has {x.shape[1]}")
    if m.scaler is not None:
        x = m.scaler.transform(x)
    K = kernel_matrix(x, m.support, KernelParams(m.gamma), counter, backend)
    return scores_from_kernel(K, m.tau_bar)


def predict(m: TrainedModel, X, counter: KernelCounter = None, backend=None) -> np.ndarray:
    """Class with the largest kernel-weighted score; M kernel calls per row."""
    return argmax_classes(decision_scores(m, X, counter, backend))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def model_to_text(m: TrainedModel) -> str:
    M, F = m.support.shape
    lines = [f"{MODEL_MAGIC} {m.version} {M} {m.n_classes} {F} {float(m.gamma)!r}"]
    lines.extend(_fmt(row) for row in m.support)
    lines.extend(_fmt(row) for row in m.tau_bar)
    if m.scaler is not None:
        lines.append("minmax")
        lines.append(_fmt(m.scaler.low))
        lines.append(_fmt(m.scaler.span))
    return "\n".join(lines) + "\n"


def save_model(m: TrainedModel, path) -> None:
    Path(path).write_text(model_to_text(m), encoding="utf-8")


def _floats(line, expected, what, lineno):
    parts = line.split()
    if len(parts) != expected:
        raise DataError(f"line {lineno}: {what} has {len(parts)} values, expected {expected}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise DataError(f"line {lineno}: non-numeric value in {what}") from None


def model_from_text(text: str) -> TrainedModel:
    lines = text.splitlines()
    if not lines:
        raise DataError("model file is empty")
    head = lines[0].split()
    if len(head) != 6 or head[0] != MODEL_MAGIC:
        raise DataError("not a model file: bad header")
    if head[1] != MODEL_VERSION:
        raise DataError(f"unsupported model version {head[1]!r}, expected {MODEL_VERSION!r}")
    try:
        M, C, F = int(head[2]), int(head[3]), int(head[4])
        gamma = float(head[5])
    except ValueError:
        raise DataError("malformed model header") from None
    if min(M, C, F) < 1:
        raise DataError("model header sizes must be positive")
    body = lines[1:]
    if len(body) < 2 * M:
        raise DataError(f"truncated model file: expected {2 * M} data lines, found {len(body)}")
    support = [_floats(body[k], F, "support row", k + 2) for k in range(M)]
    tau = [_floats(body[M + k], C, "tau row", M + k + 2) for k in range(M)]
    scaler = None
    rest = [ln for ln in body[2 * M :] if ln.strip()]
    if rest:
        if rest[0].strip() != "minmax" or len(rest) != 3:
            raise DataError("malformed trailing section in model file")
        scaler = MinMaxScaler(
            np.array(_floats(rest[1], F, "minmax low", 2 * M + 3)),
            np.array(_floats(rest[2], F, "minmax span", 2 * M + 4)),
        )
    return TrainedModel(np.array(support), np.array(tau), gamma, C, scaler)


def load_model(path) -> TrainedModel:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    try:
        return model_from_text(path.read_text(encoding="utf-8"))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None
