"""Dataset container, CSV ingestion, deterministic splits and raster export."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer labels in ``[0, n_classes)``."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    names: Optional[tuple] = None

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DataError(f"features must be a non-empty 2-D matrix, got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise DataError(f"expected {x.shape[0]} labels, got shape {y.shape}")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise DataError("labels must be integers")
        y = y.astype(np.int64)
        if self.n_classes < 1:
            raise DataError(f"class count must be positive, got {self.n_classes}")
        bad = np.flatnonzero((y < 0) | (y >= self.n_classes))
        if bad.size:
            raise DataError(
                f"label {y[bad[0]]} at index {bad[0]} outside [0, {self.n_classes})"
            )
        if not np.all(np.isfinite(x)):
            raise DataError("features contain non-finite values")
        if self.names is not None and len(self.names) != self.n_classes:
            raise DataError(f"expected {self.n_classes} class names, got {len(self.names)}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_examples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.features[index], self.labels[index], self.n_classes, self.names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-feature min-max scaling to [0, 1], fitted on one matrix."""

    low: np.ndarray
    span: np.ndarray

    @classmethod
    def fit(cls, features) -> "MinMaxScaler":
        x = np.asarray(features, dtype=np.float64)
        low = x.min(axis=0)
        span = x.max(axis=0) - low
        # constant features map to 0 rather than dividing by zero
        span = np.where(span > 0, span, 1.0)
        return cls(low, span)

    def transform(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.shape[-1] != self.low.shape[0]:
            raise DataError(f"scaler fitted on {self.low.shape[0]} features, got {x.shape[-1]}")
        return (x - self.low) / self.span

    def apply(self, d: Dataset) -> Dataset:
        return Dataset(self.transform(d.features), d.labels, d.n_classes, d.names)


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            rows.append((lineno, [cell.strip() for cell in text.split(",")]))
    if not rows:
        raise DataError(f"{path}: no rows")
    arity = len(rows[0][1])
    for lineno, cells in rows:
        if len(cells) != arity:
            raise DataError(f"{path}: row {lineno} has {len(cells)} columns, expected {arity}")
    return path, rows, arity


def _parse_float(cell, path, lineno):
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"{path}: row {lineno}: non-numeric feature {cell!r}") from None
    if not np.isfinite(value):
        raise DataError(f"{path}: row {lineno}: non-finite feature {cell!r}")
    return value


def load_csv(path, label_column: int = -1, class_count: Optional[int] = None) -> Dataset:
    """Read a comma-separated file with one example per row.

    Lines starting with ``#`` and blank lines are skipped. The label column
    defaults to the last one. When ``class_count`` is omitted it is inferred
    as ``max(label) + 1``.
    """
    path, rows, arity = _read_rows(path)
    if arity < 2:
        raise DataError(f"{path}: need at least one feature column and a label column")
    col = label_column if label_column >= 0 else arity + label_column
    if not 0 <= col < arity:
        raise DataError(f"{path}: label column {label_column} out of range for {arity} columns")
    feats = np.empty((len(rows), arity - 1))
    labels = np.empty(len(rows), dtype=np.int64)
    for r, (lineno, cells) in enumerate(rows):
        try:
            label = int(cells[col])
        except ValueError:
            raise DataError(f"{path}: row {lineno}: label {cells[col]!r} is not an integer") from None
        if label < 0 or (class_count is not None and label >= class_count):
            raise DataError(
                f"{path}: row {lineno}: label {label} outside [0, {class_count})"
            )
        labels[r] = label
        feats[r] = [_parse_float(c, path, lineno) for k, c in enumerate(cells) if k != col]
    if class_count is None:
        class_count = int(labels.max()) + 1
    return Dataset(feats, labels, class_count)


def load_features(path) -> np.ndarray:
    """Read a label-free comma-separated feature matrix."""
    path, rows, arity = _read_rows(path)
    return np.array(
        [[_parse_float(c, path, lineno) for c in cells] for lineno, cells in rows]
    )


def save_csv(d: Dataset, path) -> None:
    """Write features then label per row; ``repr`` floats round-trip exactly."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for x, y in zip(d.features, d.labels):
            fh.write(",".join(repr(float(v)) for v in x) + f",{int(y)}\n")


def split(d: Dataset, fraction: float, seed: int):
    """Shuffle-split into parts of size ``floor(fraction * N)`` and the rest."""
    if not 0.0 < fraction < 1.0:
        raise DataError(f"fraction must lie in (0, 1), got {fraction}")
    n = d.n_examples
    k = int(np.floor(fraction * n))
    if k < 1 or k > n - 1:
        raise DataError(f"fraction {fraction} of {n} examples leaves an empty part")
    perm = np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)).permutation(n)
    return d.subset(np.sort(perm[:k])), d.subset(np.sort(perm[k:]))


def make_blobs(
    n: int,
    n_classes: int = 3,
    separation: float = 5.0,
    n_features: int = 2,
    std: float = 1.0,
    seed: int = 0,
) -> Dataset:
    """Isotropic Gaussian blobs whose means sit on a regular polygon.

    Adjacent means are ``separation`` apart, so three classes form an
    equilateral triangle with that side. Labels are balanced and shuffled.
    """
    if n < 1 or n_classes < 1 or n_features < 1:
        raise DataError("blobs need positive size, class count and feature count")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF))
    means = np.zeros((n_classes, n_features))
    if n_classes > 1:
        radius = separation / (2.0 * np.sin(np.pi / n_classes))
        angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
        means[:, 0] = radius * np.cos(angles)
        if n_features > 1:
            means[:, 1] = radius * np.sin(angles)
    labels = rng.permutation(np.arange(n) % n_classes)
    features = means[labels] + std * rng.standard_normal((n, n_features))
    return Dataset(features, labels, n_classes)


@dataclass(frozen=True)
class RasterSpec:
    width: int
    height: int
    palette: dict = field(default_factory=dict)


# distinct colours for up to eight classes
DEFAULT_PALETTE = {
    0: (255, 128, 0),
    1: (0, 160, 0),
    2: (0, 0, 255),
    3: (135, 206, 250),
    4: (128, 128, 128),
    5: (255, 255, 0),
    6: (160, 32, 240),
    7: (255, 255, 255),
}


def ppm_bytes(predictions: Sequence[int], spec: RasterSpec) -> bytes:
    pred = np.asarray(predictions, dtype=np.int64).ravel()
    if spec.width * spec.height == 0:
        raise DataError("empty raster")
    if spec.width < 0 or spec.height < 0:
        raise DataError(f"invalid raster size {spec.width}x{spec.height}")
    if pred.size != spec.width * spec.height:
        raise DataError(
            f"{pred.size} predictions do not fill a {spec.width}x{spec.height} raster"
        )
    if np.any(pred < 0):
        raise DataError("negative class index in predictions")
    classes = np.unique(pred)
    missing = [int(c) for c in classes if int(c) not in spec.palette]
    if missing:
        raise DataError(f"no palette entry for class {missing[0]}")
    lut = np.zeros((int(classes.max()) + 1, 3), dtype=np.uint8)
    for c in classes:
        lut[c] = spec.palette[int(c)]
    header = f"P6\n{spec.width} {spec.height}\n255\n".encode("ascii")
    return header + lut[pred].tobytes()


def export_map(predictions: Sequence[int], spec: RasterSpec, path) -> None:
    """Render class indices row-major from the top-left as a binary PPM."""
    Path(path).write_bytes(ppm_bytes(predictions, spec))


def write_predictions(predictions: Sequence[int], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(f"{int(p)}\n")


def read_predictions(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    values = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values.append(int(text))
            except ValueError:
                raise DataError(f"{path}: line {lineno}: {text!r} is not a class index") from None
    return np.array(values, dtype=np.int64)
