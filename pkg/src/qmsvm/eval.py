"""Classification metrics and the phase-timing benchmark."""

import csv
import statistics
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .data import Dataset, make_blobs
from .errors import ConfigError, DataError
from .pipeline import PHASES, RunConfig, timed_predict, train

TIMING_HEADER = ("N", "phase", "seconds", "kernel_evals")
METRICS_HEADER = ("dataset", "N", "M", "accuracy", "f1", "seconds")


def confusion(pred, truth, C: int) -> np.ndarray:
    """``C x C`` counts indexed ``[true, predicted]``."""
    p = np.asarray(pred, dtype=np.int64).ravel()
    t = np.asarray(truth, dtype=np.int64).ravel()
    if p.shape != t.shape:
        raise DataError(f"{p.size} predictions for {t.size} labels")
    if p.size == 0:
        raise DataError("no predictions to evaluate")
    for name, v in (("prediction", p), ("label", t)):
        bad = (v < 0) | (v >= C)
        if bad.any():
            raise DataError(f"{name} {v[bad][0]} outside [0, {C})")
    return np.bincount(t * C + p, minlength=C * C).reshape(C, C)


def accuracy_from_confusion(cm) -> float:
    cm = np.asarray(cm)
    return float(np.trace(cm) / cm.sum())


def f1_per_class(cm) -> np.ndarray:
    """One-vs-rest F1; a class absent from both truth and predictions scores 1."""
    cm = np.asarray(cm, dtype=np.float64)
    tp = np.diag(cm)
    fn = cm.sum(axis=1) - tp
    fp = cm.sum(axis=0) - tp
    denom = tp + 0.5 * (fn + fp)
    return np.where(denom > 0, tp / np.where(denom > 0, denom, 1.0), 1.0)


def macro_f1_from_confusion(cm) -> float:
    return float(f1_per_class(cm).mean())


def accuracy(pred, truth) -> float:
    p = np.asarray(pred, dtype=np.int64).ravel()
    t = np.asarray(truth, dtype=np.int64).ravel()
    if p.shape != t.shape:
        raise DataError(f"{p.size} predictions for {t.size} labels")
    if p.size == 0:
        raise DataError("no predictions to evaluate")
    C = int(max(p.max(), t.max())) + 1
    return accuracy_from_confusion(confusion(p, t, max(C, 1)))


def macro_f1(pred, truth, C: int) -> float:
    return macro_f1_from_confusion(confusion(pred, truth, C))


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


@dataclass
class TimingReport:
    N: int
    M: int
    C: int
    B: int
    seconds: dict = field(default_factory=dict)
    kernel_evals: dict = field(default_factory=dict)
    accuracy: Optional[float] = None
    f1: Optional[float] = None

    @property
    def total_seconds(self) -> float:
        return float(sum(self.seconds.values()))

    def rows(self):
        for phase in PHASES:
            yield (self.N, phase, self.seconds[phase], self.kernel_evals[phase])


def _check_feasible(train_set: Dataset, cfg: RunConfig, repeats: int):
    if repeats < 1:
        raise ConfigError("repeats must be positive")
    if cfg.M > train_set.n_examples:
        raise ConfigError(f"infeasible: M={cfg.M} exceeds N={train_set.n_examples}")


def _train_rounds(train_sets, cfg: RunConfig, repeats: int, backend=None):
    """Median training-phase times per dataset and the last model of each.

    Repeats run round-robin over the datasets so slow drifts in machine speed
    spread evenly across sizes instead of landing on one of them.
    """
    for ts in train_sets:
        _check_feasible(ts, cfg, repeats)
    runs = [[] for _ in train_sets]
    last = [None] * len(train_sets)
    for _ in range(repeats):
        for k, ts in enumerate(train_sets):
            last[k] = train(ts, cfg, backend=backend)
            runs[k].append(last[k].seconds)
    out = []
    for r, result in zip(runs, last):
        seconds = {p: statistics.median(x[p] for x in r) for p in PHASES[:3]}
        out.append((seconds, dict(result.kernel_evals), result.model))
    return out


def time_inference(models, X, rounds: int = 20, backend=None):
    """Fastest inference time per model, calls interleaved across models.

    Interleaving puts every model under the same machine conditions, which
    matters on shared or single-core hosts whose speed drifts over seconds.
    Returns ``(seconds, kernel_evals, predictions)`` lists.
    """
    if rounds < 1:
        raise ConfigError("inference rounds must be positive")
    best = [None] * len(models)
    evals = [0] * len(models)
    preds = [None] * len(models)
    for _ in range(rounds):
        for k, model in enumerate(models):
            preds[k], t, evals[k] = timed_predict(model, X, backend)
            best[k] = t if best[k] is None else min(best[k], t)
    return best, evals, preds


def _report(train_set, cfg, seconds, evals, inf_seconds, inf_evals, pred, truth):
    cm = confusion(pred, truth, cfg.C)
    return TimingReport(
        train_set.n_examples,
        cfg.M,
        cfg.C,
        cfg.B,
        dict(seconds, inference=inf_seconds),
        dict(evals, inference=inf_evals),
        accuracy_from_confusion(cm),
        macro_f1_from_confusion(cm),
    )


def benchmark_one(
    train_set: Dataset,
    test_set: Dataset,
    cfg: RunConfig,
    repeats: int = 3,
    inference_repeats: int = 20,
    backend=None,
) -> TimingReport:
    """Median phase times over ``repeats`` full runs at one training-set size.

    Inference on a sub-millisecond workload is timed as the fastest of
    ``inference_repeats`` identical calls.
    """
    ((seconds, evals, model),) = _train_rounds([train_set], cfg, repeats, backend)
    (t,), (n,), (pred,) = time_inference([model], test_set.features, inference_repeats, backend)
    return _report(train_set, cfg, seconds, evals, t, n, pred, test_set.labels)


def benchmark(
    sizes: Sequence[int],
    cfg: RunConfig = RunConfig(),
    test_size: int = 500,
    repeats: int = 3,
    separation: float = 5.0,
    seed: int = 0,
    dataset: Optional[Dataset] = None,
    test_set: Optional[Dataset] = None,
    backend=None,
    inference_repeats: int = 20,
) -> List[TimingReport]:
    """Run the full pipeline at each training-set size with a fixed test set.

    Without ``dataset`` the data are Gaussian blobs; with it, each size takes
    the first N rows. Training repeats run round-robin over the sizes, and
    inference for all sizes is timed together once every model is trained.
    """
    sizes = [int(n) for n in sizes]
    if not sizes:
        raise ConfigError("no dataset sizes given")
    if min(sizes) < cfg.M:
        raise ConfigError(f"infeasible: M={cfg.M} exceeds N={min(sizes)}")
    if dataset is not None and max(sizes) > dataset.n_examples:
        raise ConfigError(f"dataset has {dataset.n_examples} rows, fewer than N={max(sizes)}")
    if test_set is None:
        test_set = make_blobs(test_size, cfg.C, separation, seed=seed + 1_000_003)
    if dataset is None:
        train_sets = [make_blobs(n, cfg.C, separation, seed=seed) for n in sizes]
    else:
        train_sets = [dataset.subset(np.arange(n)) for n in sizes]
    trained = _train_rounds(train_sets, cfg, repeats, backend)
    models = [t[2] for t in trained]
    inf_t, inf_n, preds = time_inference(models, test_set.features, inference_repeats, backend)
    return [
        _report(ts, cfg, secs, evals, t, n, pred, test_set.labels)
        for ts, (secs, evals, _), t, n, pred in zip(train_sets, trained, inf_t, inf_n, preds)
    ]


def write_timing_csv(reports: Iterable[TimingReport], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TIMING_HEADER)
    for r in reports:
        for n, phase, secs, evals in r.rows():
            w.writerow((n, phase, f"{secs:.6f}", evals))


def write_metrics_csv(rows, fh, header: bool = True) -> None:
    """Rows are ``(dataset, N, M, accuracy, f1, seconds)`` tuples."""
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(METRICS_HEADER)
    for name, n, m, acc, f1, secs in rows:
        w.writerow(
            (
                name,
                "" if n is None else n,
                "" if m is None else m,
                f"{acc:.6f}",
                f"{f1:.6f}",
                "" if secs is None else f"{secs:.6f}",
            )
        )
