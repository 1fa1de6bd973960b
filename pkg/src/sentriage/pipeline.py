"""End-to-end glue: prepare -> train -> score, shared by the CLI and tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abstention import ScoredPrediction
from .domain import (
    Dataset,
    PolicyMode,
    ProbabilityVector,
    ThresholdPolicy,
    validate_probability_vector,
)
from .ensemble import soft_vote
from .errors import PipelineError
from .learners.external import ExternalProbabilities
from .learners.forest import predict_proba_forest_batch, train_forest
from .learners.logistic import predict_proba_logistic_batch, train_logistic
from .neutrosophic import neutrosophic_score
from .preprocess import (
    SmoteConfig,
    Standardizer,
    filter_rare_classes,
    impute_zero,
    smote_balance,
    standardize_apply,
    standardize_fit,
    stratified_split,
)
from .service.bundle import ModelBundle


@dataclass(frozen=True, eq=False)
class PreparedData:
    """Everything cmd_prepare produces, before hitting disk."""

    filtered: Dataset
    train: Dataset
    holdout: Dataset
    train_balanced: Dataset
    standardizer: Standardizer


def prepare_dataset(
    dataset: Dataset,
    holdout_fraction: float,
    seed: int,
    k_neighbors: int = 5,
    min_count: int = 2,
) -> PreparedData:
    """The fixed preparation order; SMOTE never touches the holdout."""
    filtered = filter_rare_classes(dataset, min_count)
    imputed = impute_zero(filtered)
    train, holdout = stratified_split(imputed, holdout_fraction, seed)
    balanced = smote_balance(train, SmoteConfig(k_neighbors=k_neighbors, seed=seed))
    standardizer = standardize_fit(balanced)
    return PreparedData(
        filtered=filtered,
        train=train,
        holdout=holdout,
        train_balanced=balanced,
        standardizer=standardizer,
    )


def train_bundle(
    train_balanced: Dataset,
    standardizer: Standardizer,
    *,
    l2_lambda: float = 1e-3,
    max_iters: int = 500,
    tolerance: float = 1e-6,
    n_trees: int = 100,
    max_depth: int = 20,
    seed: int = 42,
    global_tau: float = 0.4,
    external_refs: tuple[str, ...] = (),
    metadata: dict | None = None,
) -> ModelBundle:
    """Train both in-repo learners on the standardized balanced train set.

    The bundle ships with a GLOBAL policy at the given threshold, version 1,
    pending a sweep or calibration.
    """
    z_train = standardize_apply(standardizer, train_balanced)
    logistic = train_logistic(z_train, l2_lambda=l2_lambda, tolerance=tolerance, max_iters=max_iters)
    forest = train_forest(z_train, n_trees=n_trees, max_depth=max_depth, seed=seed)
    policy = ThresholdPolicy(
        global_tau=global_tau,
        per_class_tau={},
        percentile=80.0,
        mode=PolicyMode.GLOBAL,
        version=1,
    )
    return ModelBundle(
        logistic=logistic,
        forest=forest,
        external_refs=external_refs,
        standardizer=standardizer,
        encoding=train_balanced.encoding,
        policy=policy,
        metadata=metadata or {},
    )


@dataclass(frozen=True, eq=False)
class BundleScores:
    """Per-member probabilities and ensemble scored predictions for a dataset."""

    member_probs: dict[str, np.ndarray]  # model_id -> (n, C)
    scored: list[ScoredPrediction]
    ensemble_labels: np.ndarray


def default_sample_ids(n: int) -> list[str]:
    """Row-position ids; the convention external probability files join on."""
    return [str(i) for i in range(n)]


def score_with_bundle(
    bundle: ModelBundle,
    dataset: Dataset,
    external_sets: tuple[ExternalProbabilities, ...] = (),
    sample_ids: list[str] | None = None,
) -> BundleScores:
    """Standardize, run every member, soft-vote and score each sample.

    External sets must cover every sample id; partial coverage would give
    different samples different ensembles, which poisons comparisons.
    """
    ids = sample_ids if sample_ids is not None else default_sample_ids(dataset.n_samples)
    z = standardize_apply(bundle.standardizer, dataset)
    member_probs: dict[str, np.ndarray] = {}
    if bundle.logistic is not None:
        member_probs["logistic"] = predict_proba_logistic_batch(bundle.logistic, z.features)
    if bundle.forest is not None:
        member_probs["forest"] = predict_proba_forest_batch(bundle.forest, z.features)
    for ext in external_sets:
        missing = [i for i in ids if ext.vector_for(i) is None]
        if missing:
            raise PipelineError(
                "EXTERNAL_COVERAGE",
                f"external model {ext.model_id!r} lacks {len(missing)} sample ids "
                f"(first missing: {missing[0]!r})",
            )
        member_probs[ext.model_id] = np.array(
            [ext.vector_for(i).values for i in ids], dtype=float
        )
    if not member_probs:
        raise PipelineError("BUNDLE_NOT_LOADED", "bundle has no usable learners")

    model_ids = list(member_probs)
    scored: list[ScoredPrediction] = []
    labels = np.zeros(dataset.n_samples, dtype=np.int64)
    for i in range(dataset.n_samples):
        members: list[ProbabilityVector] = [
            validate_probability_vector(member_probs[m][i]) for m in model_ids
        ]
        pred = soft_vote(members, model_ids=model_ids)
        labels[i] = pred.predicted_class
        scored.append(
            ScoredPrediction(
                sample_id=ids[i],
                predicted_class=pred.predicted_class,
                score=neutrosophic_score(pred.mean_probs),
                true_class=int(dataset.labels[i]),
            )
        )
    return BundleScores(member_probs=member_probs, scored=scored, ensemble_labels=labels)
