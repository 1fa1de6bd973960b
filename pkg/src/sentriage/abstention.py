"""Turning scores into decisions: flagging, threshold sweeps, adaptive fitting.

Retention is I <= tau and flagging is I > tau (strict), everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .domain import (
    Decision,
    NeutrosophicScore,
    PolicyMode,
    ThresholdPolicy,
)
from .ensemble import EnsemblePrediction
from .errors import PipelineError
from .neutrosophic import neutrosophic_score


@dataclass(frozen=True)
class ScoredPrediction:
    """One scored prediction; true_class is present in calibration/evaluation."""

    sample_id: str
    predicted_class: int
    score: NeutrosophicScore
    true_class: int | None = None


@dataclass(frozen=True)
class SweepRow:
    """One point of the threshold sweep.

    empty_retention marks rows where nothing was retained; accuracy is
    reported as 1.0 there by convention, so youden = coverage = 0 and the
    row can never win the sweep.
    """

    tau: float
    accuracy_retained: float
    coverage: float
    youden: float
    empty_retention: bool = False


@dataclass(frozen=True)
class CorrectnessSummary:
    """Mean indeterminacy split by prediction correctness."""

    mean_i_correct: float | None
    mean_i_incorrect: float | None
    n_correct: int
    n_incorrect: int


def decide(
    pred: EnsemblePrediction,
    policy: ThresholdPolicy,
    sample_id: str = "",
) -> Decision:
    """Score an ensemble prediction and apply the abstention policy.

    The applied threshold is the predicted class's threshold in PER_CLASS
    mode, the global threshold otherwise; the decision abstains exactly
    when I exceeds it (strict). The predicted class is carried even when
    abstaining so reviewers see what the model would have said.
    """
    score = neutrosophic_score(pred.mean_probs)
    tau = policy.threshold_for(pred.predicted_class)
    return Decision(
        sample_id=sample_id,
        predicted_class=pred.predicted_class,
        score=score,
        abstained=score.indeterminacy > tau,
        applied_threshold=tau,
        policy_version=policy.version,
    )


def sweep_thresholds(
    preds: Sequence[ScoredPrediction],
    grid: Sequence[float],
) -> list[SweepRow]:
    """Sweep retention thresholds: per tau, accuracy on retained, coverage, youden.

    Retained means I <= tau. youden is accuracy_retained * coverage (the
    product form, not the classical J statistic).
    """
    preds = list(preds)
    if not preds:
        raise PipelineError("EMPTY_INPUT", "cannot sweep an empty prediction set")
    for p in preds:
        if p.true_class is None:
            raise PipelineError("EMPTY_INPUT", f"prediction {p.sample_id!r} lacks true_class")
    for tau in grid:
        if not (0.0 <= tau <= 1.0):
            raise PipelineError("INVALID_GRID", f"grid value {tau!r} outside [0, 1]")
    n = len(preds)
    rows = []
    for tau in grid:
        retained = [p for p in preds if p.score.indeterminacy <= tau]
        coverage = len(retained) / n
        if retained:
            correct = sum(1 for p in retained if p.predicted_class == p.true_class)
            accuracy = correct / len(retained)
            empty = False
        else:
            accuracy = 1.0
            empty = True
        rows.append(
            SweepRow(
                tau=float(tau),
                accuracy_retained=accuracy,
                coverage=coverage,
                youden=accuracy * coverage,
                empty_retention=empty,
            )
        )
    return rows


def best_youden(rows: Sequence[SweepRow]) -> float:
    """Threshold of the row maximizing youden; ties prefer the larger tau."""
    if not rows:
        raise PipelineError("EMPTY_INPUT", "no sweep rows")
    best = rows[0]
    for row in rows[1:]:
        if row.youden > best.youden or (row.youden == best.youden and row.tau > best.tau):
            best = row
    return best.tau


def nearest_rank_percentile(values: Sequence[float], percentile: float) -> float:
    """Nearest-rank percentile: ceil(q/100 * n)-th smallest value, 1-based.

    Rank arithmetic is exact (rational), so e.g. the 80th percentile of 10
    values is always the 8th smallest regardless of float rounding.
    """
    if not values:
        raise PipelineError("EMPTY_INPUT", "percentile of an empty sequence")
    if not (0.0 < percentile <= 100.0):
        raise PipelineError(
            "PERCENTILE_OUT_OF_RANGE", f"percentile {percentile!r} outside (0, 100]"
        )
    ordered = sorted(values)
    n = len(ordered)
    rank = math.ceil(Fraction(str(float(percentile))) * n / 100)
    rank = min(max(rank, 1), n)
    return ordered[rank - 1]


def fit_class_thresholds(
    calibration: Sequence[ScoredPrediction],
    percentile: float,
    *,
    class_count: int,
    global_tau: float,
    base_version: int = 0,
) -> ThresholdPolicy:
    """Fit per-class thresholds at the given indeterminacy percentile.

    Thresholds key on the predicted class (the only label available at
    inference time). Classes absent from the calibration set inherit the
    global threshold as a fallback. The returned policy's version is
    base_version + 1.
    """
    calibration = list(calibration)
    if not calibration:
        raise PipelineError("EMPTY_INPUT", "cannot calibrate on an empty set")
    by_class: dict[int, list[float]] = {}
    for p in calibration:
        if not 0 <= p.predicted_class < class_count:
            raise PipelineError(
                "INDEX_OUT_OF_RANGE", f"predicted class {p.predicted_class} out of range"
            )
        by_class.setdefault(p.predicted_class, []).append(p.score.indeterminacy)
    per_class = {}
    for c in range(class_count):
        if c in by_class:
            per_class[c] = nearest_rank_percentile(by_class[c], percentile)
        else:
            per_class[c] = global_tau
    return ThresholdPolicy(
        global_tau=global_tau,
        per_class_tau=per_class,
        percentile=float(percentile),
        mode=PolicyMode.PER_CLASS,
        version=base_version + 1,
    )


def indeterminacy_by_correctness(preds: Sequence[ScoredPrediction]) -> CorrectnessSummary:
    """Mean indeterminacy over correctly vs incorrectly predicted samples.

    An empty group's mean is reported as None.
    """
    preds = list(preds)
    if not preds:
        raise PipelineError("EMPTY_INPUT", "no predictions")
    correct, incorrect = [], []
    for p in preds:
        if p.true_class is None:
            raise PipelineError("EMPTY_INPUT", f"prediction {p.sample_id!r} lacks true_class")
        (correct if p.predicted_class == p.true_class else incorrect).append(
            p.score.indeterminacy
        )
    return CorrectnessSummary(
        mean_i_correct=math.fsum(correct) / len(correct) if correct else None,
        mean_i_incorrect=math.fsum(incorrect) / len(incorrect) if incorrect else None,
        n_correct=len(correct),
        n_incorrect=len(incorrect),
    )


def render_sweep_csv(rows: Sequence[SweepRow]) -> str:
    """Sweep report as CSV with 6-decimal fixed formatting."""
    lines = ["tau,accuracy,coverage,youden"]
    for r in rows:
        lines.append(
            f"{r.tau:.6f},{r.accuracy_retained:.6f},{r.coverage:.6f},{r.youden:.6f}"
        )
    return "\n".join(lines) + "\n"
