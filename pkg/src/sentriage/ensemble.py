"""Soft-voting aggregation of base-model probability vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .domain import ProbabilityVector, validate_probability_vector
from .errors import PipelineError


@dataclass(frozen=True)
class EnsemblePrediction:
    """Mean distribution over members plus the argmax class."""

    mean_probs: ProbabilityVector
    predicted_class: int
    member_probs: tuple[tuple[str, ProbabilityVector], ...]


def soft_vote(
    members: Sequence[ProbabilityVector],
    model_ids: Sequence[str] | None = None,
) -> EnsemblePrediction:
    """Average member distributions and predict the argmax of the mean.

    The mean is the plain unweighted arithmetic mean, accumulated with
    exact (fsum) summation so member order never changes the result.
    Argmax ties break toward the lowest class index.
    """
    members = list(members)
    if not members:
        raise PipelineError("EMPTY_MEMBER_SET", "soft vote needs at least one member")
    class_count = members[0].class_count
    for m in members[1:]:
        if m.class_count != class_count:
            raise PipelineError(
                "CLASS_COUNT_MISMATCH",
                f"member has {m.class_count} classes, expected {class_count}",
            )
    n = len(members)
    mean = tuple(math.fsum(m.values[c] for m in members) / n for c in range(class_count))
    mean_probs = validate_probability_vector(mean)
    predicted = max(range(class_count), key=lambda c: (mean[c], -c))
    if model_ids is None:
        model_ids = [f"member_{i}" for i in range(n)]
    elif len(model_ids) != n:
        raise PipelineError("CLASS_COUNT_MISMATCH", "one model id per member required")
    return EnsemblePrediction(
        mean_probs=mean_probs,
        predicted_class=predicted,
        member_probs=tuple(zip([str(m) for m in model_ids], members)),
    )
