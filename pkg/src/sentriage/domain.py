"""Shared domain types used by every stage of the detection pipeline.

All types here are immutable after construction and safe to share across
concurrent readers. Numeric invariants are enforced at construction so a
value that exists is a value that validates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import PipelineError

#: Absolute tolerance on the sum of a probability vector. Producers must
#: renormalize on their side; validation never repairs input.
PROB_SUM_TOLERANCE = 1e-6

#: Tolerance on truth + falsity == 1 for a neutrosophic score.
TRUTH_FALSITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ProbabilityVector:
    """Per-class probabilities for one sample from one model or the ensemble."""

    values: tuple[float, ...]

    @property
    def class_count(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def validate_probability_vector(values: Iterable[float]) -> ProbabilityVector:
    """Validate per-class probabilities without renormalizing.

    Producers (learners, the ensemble) renormalize before handing vectors
    over; a failure here therefore surfaces a producer bug rather than a
    numeric hiccup worth papering over.

    Raises:
        PipelineError: TOO_FEW_CLASSES if fewer than two entries,
            NEGATIVE_ENTRY on any entry < 0, SUM_OUT_OF_TOLERANCE when
            |sum - 1| > 1e-6.
    """
    vals = tuple(float(v) for v in values)
    if len(vals) < 2:
        raise PipelineError("TOO_FEW_CLASSES", f"need at least 2 classes, got {len(vals)}")
    for i, v in enumerate(vals):
        if not math.isfinite(v):
            raise PipelineError("SUM_OUT_OF_TOLERANCE", f"non-finite entry {v!r} at index {i}")
        if v < 0.0:
            raise PipelineError("NEGATIVE_ENTRY", f"negative probability {v!r} at index {i}")
    total = math.fsum(vals)
    if abs(total - 1.0) > PROB_SUM_TOLERANCE:
        raise PipelineError("SUM_OUT_OF_TOLERANCE", f"probabilities sum to {total!r}")
    return ProbabilityVector(vals)


@dataclass(frozen=True)
class NeutrosophicScore:
    """Truth / indeterminacy / falsity triple attached to one prediction.

    truth is the mass on the predicted class, falsity the aggregated mass
    on every other class (their sum is 1 because probabilities sum to 1),
    and indeterminacy the normalized entropy of the full distribution.
    """

    truth: float
    indeterminacy: float
    falsity: float

    def __post_init__(self):
        for name in ("truth", "indeterminacy", "falsity"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise PipelineError("SCORE_OUT_OF_RANGE", f"{name}={v!r} outside [0, 1]")
        if abs(self.truth + self.falsity - 1.0) > TRUTH_FALSITY_TOLERANCE:
            raise PipelineError(
                "TRUTH_FALSITY_MISMATCH",
                f"truth + falsity = {self.truth + self.falsity!r}, expected 1",
            )


@dataclass(frozen=True)
class LabelEncoding:
    """Class-name <-> index mapping.

    Indices follow lexicographic order over class names (plain Unicode
    code-point comparison). The order is pinned so that runs on the same
    class set agree regardless of input row order.
    """

    class_names: tuple[str, ...]
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.class_names:
            raise PipelineError("EMPTY_ENCODING", "encoding needs at least one class")
        if len(set(self.class_names)) != len(self.class_names):
            raise PipelineError("DUPLICATE_CLASS_NAME", f"duplicate names in {self.class_names}")
        if list(self.class_names) != sorted(self.class_names):
            raise PipelineError(
                "ENCODING_NOT_SORTED", "class names must be in lexicographic order"
            )
        object.__setattr__(
            self, "_index", MappingProxyType({n: i for i, n in enumerate(self.class_names)})
        )

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "LabelEncoding":
        return cls(tuple(sorted(set(names))))

    @property
    def class_count(self) -> int:
        return len(self.class_names)

    def encode(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise PipelineError("UNKNOWN_CLASS", f"class name {name!r} not in encoding") from None

    def decode(self, index: int) -> str:
        if not 0 <= index < len(self.class_names):
            raise PipelineError("UNKNOWN_CLASS", f"class index {index} out of range")
        return self.class_names[index]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Row-major feature matrix with encoded labels.

    Feature arrays are copied and frozen at construction; missing values
    are NaN until imputation removes them.
    """

    features: np.ndarray
    labels: np.ndarray
    encoding: LabelEncoding
    feature_names: tuple[str, ...]

    def __post_init__(self):
        feats = np.array(self.features, dtype=float, copy=True)
        labs = np.array(self.labels, dtype=np.int64, copy=True)
        if feats.ndim != 2:
            raise PipelineError("BAD_SHAPE", f"features must be 2-D, got shape {feats.shape}")
        if labs.ndim != 1 or labs.shape[0] != feats.shape[0]:
            raise PipelineError(
                "BAD_SHAPE",
                f"labels length {labs.shape} does not match {feats.shape[0]} rows",
            )
        if feats.shape[1] != len(self.feature_names):
            raise PipelineError(
                "BAD_SHAPE",
                f"{len(self.feature_names)} feature names for {feats.shape[1]} columns",
            )
        if labs.size and (labs.min() < 0 or labs.max() >= self.encoding.class_count):
            raise PipelineError("INDEX_OUT_OF_RANGE", "label index outside encoding")
        feats.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.encoding.class_count)

    def take(self, indices: Sequence[int]) -> "Dataset":
        """New dataset holding the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.encoding, self.feature_names)


class PolicyMode(Enum):
    GLOBAL = "GLOBAL"
    PER_CLASS = "PER_CLASS"


@dataclass(frozen=True)
class ThresholdPolicy:
    """Abstention thresholds: one global value plus optional per-class values.

    mode selects which threshold decide() applies; version increases
    monotonically with every recalibration so decisions can name the
    policy that produced them.
    """

    global_tau: float
    per_class_tau: Mapping[int, float]
    percentile: float
    mode: PolicyMode
    version: int

    def __post_init__(self):
        taus = [self.global_tau, *self.per_class_tau.values()]
        for t in taus:
            if not (0.0 <= t <= 1.0):
                raise PipelineError("THRESHOLD_OUT_OF_RANGE", f"threshold {t!r} outside [0, 1]")
        if not (0.0 < self.percentile <= 100.0):
            raise PipelineError(
                "PERCENTILE_OUT_OF_RANGE", f"percentile {self.percentile!r} outside (0, 100]"
            )
        if self.mode is PolicyMode.PER_CLASS and not self.per_class_tau:
            raise PipelineError("MISSING_CLASS_THRESHOLD", "PER_CLASS policy has no thresholds")
        object.__setattr__(self, "per_class_tau", MappingProxyType(dict(self.per_class_tau)))

    def threshold_for(self, class_index: int) -> float:
        if self.mode is PolicyMode.GLOBAL:
            return self.global_tau
        try:
            return self.per_class_tau[class_index]
        except KeyError:
            raise PipelineError(
                "MISSING_CLASS_THRESHOLD", f"no threshold for class {class_index}"
            ) from None


@dataclass(frozen=True)
class Decision:
    """Emitted label or abstention for one sample.

    The abstained flag is fully determined by the score and the applied
    threshold; construction enforces that equivalence so it can always be
    reconstructed from the persisted fields.
    """

    sample_id: str
    predicted_class: int
    score: NeutrosophicScore
    abstained: bool
    applied_threshold: float
    policy_version: int

    def __post_init__(self):
        expected = self.score.indeterminacy > self.applied_threshold
        if self.abstained != expected:
            raise PipelineError(
                "DECISION_INCONSISTENT",
                f"abstained={self.abstained} but I={self.score.indeterminacy!r} "
                f"vs threshold {self.applied_threshold!r}",
            )
