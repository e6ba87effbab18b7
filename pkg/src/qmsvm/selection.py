"""Choosing the M training examples that define the QUBO."""

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ConfigError, DataError

METHODS = ("random", "kmeans")


@dataclass(frozen=True)
class SelectionConfig:
    method: str = "random"
    M: int = 60
    seed: int = 0
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown selection method {self.method!r}; expected one of {METHODS}")
        if self.M < 1:
            raise ConfigError(f"M must be positive, got {self.M}")
        if self.kmeans_max_iter < 1:
            raise ConfigError("kmeans_max_iter must be positive")
        if self.kmeans_tol < 0:
            raise ConfigError("kmeans_tol must be nonnegative")


def _rng(seed, *stream):
    return np.random.default_rng(
        np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *stream])
    )


def check_feasible(cfg: SelectionConfig, n_classes: int) -> None:
    """Configuration checks that need no data beyond the class count."""
    if cfg.method == "kmeans" and cfg.M % n_classes:
        raise ConfigError(f"M not divisible by C (M={cfg.M}, C={n_classes})")


def select_random(d: Dataset, cfg: SelectionConfig) -> Dataset:
    """Draw M rows uniformly without replacement."""
    if cfg.M > d.n_examples:
        raise ConfigError(f"cannot select M={cfg.M} examples from N={d.n_examples}")
    idx = _rng(cfg.seed).choice(d.n_examples, size=cfg.M, replace=False)
    return d.subset(np.sort(idx))


def _sq_dist(X, centroids):
    # (n, k) squared distances, accumulated feature by feature
    out = np.zeros((X.shape[0], centroids.shape[0]))
    for f in range(X.shape[1]):
        diff = X[:, f, None] - centroids[None, :, f]
        out += diff * diff
    return out


def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    closest = _sq_dist(X, centroids[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            pick = rng.choice(n, p=closest / total)
        else:
            # every point already coincides with a centroid
            pick = rng.integers(n)
        centroids[j] = X[pick]
        closest = np.minimum(closest, _sq_dist(X, centroids[j : j + 1])[:, 0])
    return centroids


def kmeans(X, k: int, rng, max_iter: int = 100, tol: float = 1e-6):
    """Lloyd's algorithm from a k-means++ start.

    Returns ``(centroids, assignment, history)`` where ``history`` lists the
    within-cluster sum of squares after every assignment step.
    """
    X = np.asarray(X, dtype=np.float64)
    if not 1 <= k <= X.shape[0]:
        raise DataError(f"cannot form {k} clusters from {X.shape[0]} points")
    centroids = _kmeans_pp(X, k, rng)
    history = []
    for _ in range(max_iter):
        dist = _sq_dist(X, centroids)
        assign = dist.argmin(axis=1)
        own = dist[np.arange(X.shape[0]), assign]
        history.append(float(own.sum()))
        new = centroids.copy()
        counts = np.bincount(assign, minlength=k)
        for j in np.flatnonzero(counts):
            new[j] = X[assign == j].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            far = own.copy()
            for j in empty:
                p = int(far.argmax())
                new[j] = X[p]
                far[p] = -1.0
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol:
            break
    dist = _sq_dist(X, centroids)
    assign = dist.argmin(axis=1)
    history.append(float(dist[np.arange(X.shape[0]), assign].sum()))
    return centroids, assign, history


def select_kmeans(d: Dataset, cfg: SelectionConfig) -> Dataset:
    """Per-class k-means with k = M / C; the centroids become the subset."""
    check_feasible(cfg, d.n_classes)
    k = cfg.M // d.n_classes
    counts = d.class_counts()
    short = np.flatnonzero(counts < k)
    if short.size:
        c = int(short[0])
        raise DataError(f"class {c} has {counts[c]} examples, fewer than M/C={k}")
    feats = []
    labels = []
    for c in range(d.n_classes):
        rows = d.features[d.labels == c]
        centroids, _, _ = kmeans(rows, k, _rng(cfg.seed, c), cfg.kmeans_max_iter, cfg.kmeans_tol)
        feats.append(centroids)
        labels.append(np.full(k, c))
    return Dataset(np.vstack(feats), np.concatenate(labels), d.n_classes, d.names)


def select(d: Dataset, cfg: SelectionConfig) -> Dataset:
    if cfg.method == "kmeans":
        return select_kmeans(d, cfg)
    return select_random(d, cfg)
