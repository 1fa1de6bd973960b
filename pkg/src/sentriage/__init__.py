"""Indeterminacy-aware intrusion detection pipeline.

Ensemble soft voting over base classifiers, truth/indeterminacy/falsity
decomposition of every prediction, global and per-class adaptive
abstention, and a streaming decision service with an analyst review loop.
"""

__version__ = "0.1.0"

from .abstention import (
    ScoredPrediction,
    SweepRow,
    best_youden,
    decide,
    fit_class_thresholds,
    indeterminacy_by_correctness,
    sweep_thresholds,
)
from .domain import (
    Dataset,
    Decision,
    LabelEncoding,
    NeutrosophicScore,
    PolicyMode,
    ProbabilityVector,
    ThresholdPolicy,
    validate_probability_vector,
)
from .ensemble import EnsemblePrediction, soft_vote
from .errors import PipelineError
from .neutrosophic import neutrosophic_score, normalized_entropy

__all__ = [
    "Dataset",
    "Decision",
    "EnsemblePrediction",
    "LabelEncoding",
    "NeutrosophicScore",
    "PipelineError",
    "PolicyMode",
    "ProbabilityVector",
    "ScoredPrediction",
    "SweepRow",
    "ThresholdPolicy",
    "best_youden",
    "decide",
    "fit_class_thresholds",
    "indeterminacy_by_correctness",
    "neutrosophic_score",
    "normalized_entropy",
    "soft_vote",
    "sweep_thresholds",
    "validate_probability_vector",
]
