"""Data preparation: rare-class filtering, imputation, stratified holdout,
SMOTE balancing, standardization, and a synthetic generator for desk-scale runs.

The pipeline order is fixed:

    filter_rare -> encode -> impute -> stratified_split
        -> smote_balance(train only) -> standardize_fit(train)
        -> standardize_apply(train and holdout)

The holdout set is never touched by SMOTE; it keeps the original class
proportions. Imputation runs before SMOTE because nearest-neighbor search
needs complete rows, and SMOTE runs in the unstandardized feature space.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .domain import Dataset, LabelEncoding
from .errors import PipelineError


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean and population stddev (ddof = 0) fitted on one matrix.

    Zero-variance features are the ones whose stddev is exactly 0; they map
    to 0.0 under apply.
    """

    means: tuple[float, ...]
    stddevs: tuple[float, ...]

    @property
    def n_features(self) -> int:
        return len(self.means)

    @property
    def zero_variance(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.stddevs) if s == 0.0)


class SmoteTarget(Enum):
    BALANCE_TO_MAJORITY = "BALANCE_TO_MAJORITY"


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target: SmoteTarget = SmoteTarget.BALANCE_TO_MAJORITY
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise PipelineError("INVALID_CONFIG", f"k_neighbors must be >= 1, got {self.k_neighbors}")


@dataclass(frozen=True)
class SyntheticConfig:
    """Isotropic Gaussian blobs: one mean per class, shared spread."""

    class_count: int
    samples_per_class: int
    feature_dim: int
    class_means: tuple[tuple[float, ...], ...]
    overlap_sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.class_count < 2:
            raise PipelineError("INVALID_CONFIG", "need at least 2 classes")
        if self.samples_per_class < 1 or self.feature_dim < 1:
            raise PipelineError("INVALID_CONFIG", "samples_per_class and feature_dim must be positive")
        if self.overlap_sigma <= 0:
            raise PipelineError("INVALID_CONFIG", "overlap_sigma must be positive")
        if len(self.class_means) != self.class_count:
            raise PipelineError("INVALID_CONFIG", "one mean vector per class required")
        for m in self.class_means:
            if len(m) != self.feature_dim:
                raise PipelineError("INVALID_CONFIG", "mean vector length must equal feature_dim")
        if len({tuple(m) for m in self.class_means}) != self.class_count:
            raise PipelineError("INVALID_CONFIG", "class means must be pairwise distinct")


def filter_rare_classes(dataset: Dataset, min_count: int = 2) -> Dataset:
    """Drop classes with fewer than min_count samples and rebuild the encoding.

    Surviving rows keep their original order.
    """
    if min_count < 1:
        raise PipelineError("INVALID_CONFIG", f"min_count must be >= 1, got {min_count}")
    counts = dataset.class_counts()
    survivors = [c for c in range(dataset.encoding.class_count) if counts[c] >= min_count]
    if not survivors:
        raise PipelineError("EMPTY_RESULT", "no class meets the minimum count")
    if len(survivors) == dataset.encoding.class_count:
        return dataset
    new_encoding = LabelEncoding.from_names(dataset.encoding.decode(c) for c in survivors)
    remap = {c: new_encoding.encode(dataset.encoding.decode(c)) for c in survivors}
    keep = np.isin(dataset.labels, survivors)
    new_labels = np.array([remap[c] for c in dataset.labels[keep]], dtype=np.int64)
    return Dataset(dataset.features[keep], new_labels, new_encoding, dataset.feature_names)


def impute_zero(dataset: Dataset) -> Dataset:
    """Replace every missing (NaN) entry with 0.0; other entries are untouched."""
    feats = np.array(dataset.features, copy=True)
    feats[np.isnan(feats)] = 0.0
    return Dataset(feats, dataset.labels, dataset.encoding, dataset.feature_names)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(
    dataset: Dataset,
    holdout_fraction: float,
    seed: int,
) -> tuple[Dataset, Dataset]:
    """Split into (train, holdout) preserving per-class proportions.

    Per class, the holdout receives round(fraction * n_c) samples, at least
    one and at most n_c - 1 so both sides see every class. Selection is
    uniform under the seed; rows keep their original order inside each part.
    """
    if not (0.0 < holdout_fraction < 1.0):
        raise PipelineError("INVALID_CONFIG", f"holdout fraction {holdout_fraction!r} outside (0, 1)")
    counts = dataset.class_counts()
    for c, n_c in enumerate(counts):
        if 0 < n_c < 2:
            raise PipelineError(
                "CLASS_TOO_SMALL",
                f"class {dataset.encoding.decode(c)!r} has {n_c} sample(s); need >= 2",
            )
    rng = np.random.default_rng(seed)
    holdout_idx: list[np.ndarray] = []
    for c in range(dataset.encoding.class_count):
        rows = np.flatnonzero(dataset.labels == c)
        if rows.size == 0:
            continue
        n_hold = min(rows.size - 1, max(1, _round_half_up(holdout_fraction * rows.size)))
        chosen = rng.choice(rows.size, size=n_hold, replace=False)
        holdout_idx.append(rows[chosen])
    hold = np.sort(np.concatenate(holdout_idx))
    mask = np.zeros(dataset.n_samples, dtype=bool)
    mask[hold] = True
    train = np.flatnonzero(~mask)
    return dataset.take(train), dataset.take(hold)


def _same_class_neighbors(points: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest same-class neighbors per row (self excluded).

    Euclidean distance; ties resolve by lower row index (stable sort).
    """
    diff = points[:, None, :] - points[None, :, :]
    dists = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dists, np.inf)
    order = np.argsort(dists, axis=1, kind="stable")
    return order[:, :k]


def smote_balance(train: Dataset, config: SmoteConfig) -> Dataset:
    """Oversample every minority class up to the majority count.

    Each synthetic point is x + delta * (neighbor - x) with delta uniform in
    [0, 1], the base x cycling round-robin through the class's original rows
    and the neighbor drawn uniformly from x's k nearest same-class
    neighbors. Synthetic rows are appended after all original rows.
    """
    counts = train.class_counts()
    present = [c for c in range(train.encoding.class_count) if counts[c] > 0]
    for c in present:
        if counts[c] <= config.k_neighbors:
            raise PipelineError(
                "CLASS_SMALLER_THAN_K",
                f"class {train.encoding.decode(c)!r} has {counts[c]} samples; "
                f"needs more than k={config.k_neighbors}",
            )
    majority = int(counts.max())
    rng = np.random.default_rng(config.seed)
    synth_rows: list[np.ndarray] = []
    synth_labels: list[int] = []
    for c in present:
        deficit = majority - int(counts[c])
        if deficit == 0:
            continue
        rows = np.flatnonzero(train.labels == c)
        points = train.features[rows]
        neighbors = _same_class_neighbors(points, config.k_neighbors)
        for j in range(deficit):
            base = j % rows.size
            pick = int(rng.integers(0, config.k_neighbors))
            delta = rng.random()
            neighbor = points[neighbors[base, pick]]
            synth_rows.append(points[base] + delta * (neighbor - points[base]))
            synth_labels.append(c)
    if not synth_rows:
        return train
    features = np.vstack([train.features, np.array(synth_rows)])
    labels = np.concatenate([train.labels, np.array(synth_labels, dtype=np.int64)])
    return Dataset(features, labels, train.encoding, train.feature_names)


def standardize_fit(train: Dataset) -> Standardizer:
    """Record per-feature mean and population stddev of the training matrix."""
    if train.n_samples < 2:
        raise PipelineError("TOO_FEW_ROWS", "standardizer needs at least 2 rows")
    means = train.features.mean(axis=0)
    stddevs = train.features.std(axis=0, ddof=0)
    return Standardizer(means=tuple(float(m) for m in means), stddevs=tuple(float(s) for s in stddevs))


def standardize_apply(std: Standardizer, data: Dataset) -> Dataset:
    """z = (x - mean) / stddev per feature; zero-variance features map to 0."""
    if data.n_features != std.n_features:
        raise PipelineError(
            "DIMENSION_MISMATCH",
            f"data has {data.n_features} features, standardizer expects {std.n_features}",
        )
    means = np.asarray(std.means)
    stds = np.asarray(std.stddevs)
    safe = np.where(stds == 0.0, 1.0, stds)
    z = (data.features - means) / safe
    z[:, stds == 0.0] = 0.0
    return Dataset(z, data.labels, data.encoding, data.feature_names)


def standardize_apply_matrix(std: Standardizer, features: np.ndarray) -> np.ndarray:
    """standardize_apply for a bare feature matrix (service decision path)."""
    feats = np.atleast_2d(np.asarray(features, dtype=float))
    if feats.shape[1] != std.n_features:
        raise PipelineError(
            "DIMENSION_MISMATCH",
            f"got {feats.shape[1]} features, standardizer expects {std.n_features}",
        )
    means = np.asarray(std.means)
    stds = np.asarray(std.stddevs)
    safe = np.where(stds == 0.0, 1.0, stds)
    z = (feats - means) / safe
    z[:, stds == 0.0] = 0.0
    return z


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    """Draw samples_per_class rows per class from isotropic Gaussians.

    Class c's rows come from N(class_means[c], overlap_sigma^2 I). Larger
    overlap_sigma yields more class overlap. Deterministic under the seed.
    """
    rng = np.random.default_rng(config.seed)
    width = len(str(config.class_count - 1))
    names = [f"class_{c:0{width}d}" for c in range(config.class_count)]
    encoding = LabelEncoding.from_names(names)
    blocks = []
    labels = []
    for c in range(config.class_count):
        mean = np.asarray(config.class_means[c], dtype=float)
        block = rng.normal(0.0, 1.0, size=(config.samples_per_class, config.feature_dim))
        blocks.append(block * config.overlap_sigma + mean)
        labels.extend([encoding.encode(names[c])] * config.samples_per_class)
    feature_names = tuple(f"feature_{j}" for j in range(config.feature_dim))
    return Dataset(np.vstack(blocks), np.array(labels, dtype=np.int64), encoding, feature_names)


def default_class_means(class_count: int, feature_dim: int, separation: float) -> tuple[tuple[float, ...], ...]:
    """Deterministic well-spread means: scaled one-hot axes, wrapping with growth."""
    means = []
    for c in range(class_count):
        v = np.zeros(feature_dim)
        v[c % feature_dim] = separation * (1 + c // feature_dim)
        means.append(tuple(float(x) for x in v))
    return tuple(means)


# ---------------------------------------------------------------------------
# Dataset CSV format: header row, one label column (class names as strings),
# all other columns numeric features. Empty fields are missing values.
# ---------------------------------------------------------------------------


def _format_value(x: float) -> str:
    if math.isnan(x):
        return ""
    return repr(float(x))


def load_dataset_csv(path: str | Path, label_column: str = "what") -> Dataset:
    """Read a dataset CSV; empty feature fields become NaN (missing)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise PipelineError("PARSE_ERROR", f"cannot read {path}: {e}") from e
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise PipelineError("PARSE_ERROR", f"{path} is empty") from None
    if label_column not in header:
        raise PipelineError("PARSE_ERROR", f"label column {label_column!r} not in header {header}")
    label_pos = header.index(label_column)
    feature_names = tuple(h for i, h in enumerate(header) if i != label_pos)
    if not feature_names:
        raise PipelineError("PARSE_ERROR", f"{path} has no feature columns")
    rows: list[list[float]] = []
    label_names: list[str] = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise PipelineError("PARSE_ERROR", f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
        label_names.append(rec[label_pos])
        vals = []
        for i, field_ in enumerate(rec):
            if i == label_pos:
                continue
            if field_ == "":
                vals.append(math.nan)
            else:
                try:
                    vals.append(float(field_))
                except ValueError:
                    raise PipelineError(
                        "PARSE_ERROR",
                        f"{path}:{lineno}: non-numeric feature value {field_!r} in column {header[i]!r}",
                    ) from None
        rows.append(vals)
    if not rows:
        raise PipelineError("PARSE_ERROR", f"{path} has a header but no data rows")
    encoding = LabelEncoding.from_names(label_names)
    labels = np.array([encoding.encode(n) for n in label_names], dtype=np.int64)
    return Dataset(np.array(rows, dtype=float), labels, encoding, feature_names)


def save_dataset_csv(dataset: Dataset, path: str | Path, label_column: str = "what") -> None:
    """Write a dataset CSV; NaN features are written as empty fields."""
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*dataset.feature_names, label_column])
    for i in range(dataset.n_samples):
        fields = [_format_value(x) for x in dataset.features[i]]
        fields.append(dataset.encoding.decode(int(dataset.labels[i])))
        writer.writerow(fields)
    path.write_text(buf.getvalue(), encoding="utf-8")
