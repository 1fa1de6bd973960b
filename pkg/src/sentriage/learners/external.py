"""Ingestion of precomputed class probabilities from external models.

Lets boosted or otherwise out-of-repo models join the ensemble without
reimplementing them: they contribute one validated probability vector per
sample_id, with class columns bound to the pipeline's label encoding.

CSV format: header ``sample_id,model_id,p_<class_0>,...,p_<class_{C-1}>``
with class columns in encoding order; UTF-8.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..domain import LabelEncoding, ProbabilityVector, validate_probability_vector
from ..errors import PipelineError


@dataclass(frozen=True)
class ExternalProbabilities:
    """Per-sample probability vectors from one external model."""

    model_id: str
    probabilities: Mapping[str, ProbabilityVector]
    class_names: tuple[str, ...]

    def vector_for(self, sample_id: str) -> ProbabilityVector | None:
        return self.probabilities.get(sample_id)


def load_external_probabilities(
    path: str | Path,
    encoding: LabelEncoding,
) -> tuple[ExternalProbabilities, ...]:
    """Parse and validate an external-probability CSV.

    Returns one ExternalProbabilities per model_id, in order of first
    appearance. Every row must validate as a probability vector and
    (model_id, sample_id) pairs must be unique.
    """
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
    expected = ["sample_id", "model_id", *(f"p_{name}" for name in encoding.class_names)]
    if header != expected:
        raise PipelineError(
            "CLASS_MISMATCH",
            f"{path}: header {header} does not match expected {expected}",
        )
    per_model: dict[str, dict[str, ProbabilityVector]] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(expected):
            raise PipelineError(
                "PARSE_ERROR", f"{path}:{lineno}: expected {len(expected)} fields, got {len(rec)}"
            )
        sample_id, model_id = rec[0], rec[1]
        try:
            values = [float(v) for v in rec[2:]]
        except ValueError:
            raise PipelineError(
                "PARSE_ERROR", f"{path}:{lineno}: non-numeric probability"
            ) from None
        try:
            vector = validate_probability_vector(values)
        except PipelineError as e:
            raise PipelineError(
                "INVALID_VECTOR", f"{path}:{lineno}: {e.message}"
            ) from e
        rows = per_model.setdefault(model_id, {})
        if sample_id in rows:
            raise PipelineError(
                "DUPLICATE_SAMPLE_ID",
                f"{path}:{lineno}: duplicate sample_id {sample_id!r} for model {model_id!r}",
            )
        rows[sample_id] = vector
    return tuple(
        ExternalProbabilities(
            model_id=model_id,
            probabilities=rows,
            class_names=encoding.class_names,
        )
        for model_id, rows in per_model.items()
    )
