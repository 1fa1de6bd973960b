"""Multinomial logistic regression with L2 regularization and balanced class weights.

The objective is the class-weighted mean cross-entropy plus
(l2_lambda / 2) * ||W||^2, with biases unregularized. Class c's weight is
n / (C * n_c), the balanced scheme. Optimization is deterministic: zero
initialization, full-batch L-BFGS with the gradient max-norm as the stop
criterion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..domain import Dataset, LabelEncoding, ProbabilityVector, validate_probability_vector
from ..errors import PipelineError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingDiagnostics:
    converged: bool
    n_iters: int
    final_grad_max_norm: float
    loss_history: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray  # (C, d)
    biases: np.ndarray  # (C,)
    l2_lambda: float
    class_weights: np.ndarray  # (C,)
    encoding: LabelEncoding
    diagnostics: TrainingDiagnostics

    def __post_init__(self):
        for arr in (self.weights, self.biases, self.class_weights):
            if not np.all(np.isfinite(arr)):
                raise PipelineError("NON_FINITE_PARAMETERS", "model parameters must be finite")

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    @property
    def class_count(self) -> int:
        return self.weights.shape[0]


def balanced_class_weights(labels: np.ndarray, class_count: int) -> np.ndarray:
    """w_c = n / (C * n_c); classes absent from the labels get weight 0."""
    counts = np.bincount(labels, minlength=class_count).astype(float)
    n = float(labels.size)
    weights = np.zeros(class_count)
    nonzero = counts > 0
    weights[nonzero] = n / (class_count * counts[nonzero])
    return weights


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_gradient(
    weights: np.ndarray,
    biases: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    class_weights: np.ndarray,
    l2_lambda: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Weighted mean cross-entropy + (l2/2)||W||^2 and its analytic gradient.

    Returns (loss, grad_weights, grad_biases). Biases are not regularized.
    """
    n = features.shape[0]
    probs = _softmax_rows(features @ weights.T + biases)
    sample_w = class_weights[labels]
    eps = np.finfo(float).tiny
    loss = -(sample_w * np.log(probs[np.arange(n), labels] + eps)).sum() / n
    loss += 0.5 * l2_lambda * float((weights**2).sum())

    delta = probs * sample_w[:, None]
    delta[np.arange(n), labels] -= sample_w
    delta /= n
    grad_w = delta.T @ features + l2_lambda * weights
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


def train_logistic(
    train: Dataset,
    l2_lambda: float = 1e-3,
    tolerance: float = 1e-6,
    max_iters: int = 500,
) -> LogisticModel:
    """Fit the model on (standardized) training data.

    Convergence means the gradient max-norm dropped below tolerance; if
    max_iters runs out first, the model is still returned and the
    non-convergence is reported through the diagnostics (and a warning).
    """
    if l2_lambda < 0:
        raise PipelineError("INVALID_CONFIG", "l2_lambda must be >= 0")
    X = train.features
    y = train.labels
    c = train.encoding.class_count
    d = train.n_features
    class_weights = balanced_class_weights(y, c)

    def unpack(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return theta[: c * d].reshape(c, d), theta[c * d :]

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        w, b = unpack(theta)
        loss, gw, gb = loss_and_gradient(w, b, X, y, class_weights, l2_lambda)
        return loss, np.concatenate([gw.ravel(), gb])

    loss_history: list[float] = [objective(np.zeros(c * d + c))[0]]

    def record(theta: np.ndarray) -> None:
        loss_history.append(objective(theta)[0])

    result = minimize(
        objective,
        np.zeros(c * d + c),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": max_iters, "gtol": tolerance, "ftol": 0.0},
    )
    weights, biases = unpack(result.x)
    _, gw, gb = loss_and_gradient(weights, biases, X, y, class_weights, l2_lambda)
    grad_norm = float(max(np.abs(gw).max(), np.abs(gb).max()))
    converged = grad_norm < tolerance
    if not converged:
        logger.warning(
            "NOT_CONVERGED: gradient max-norm %.3e after %d iterations (tolerance %.1e)",
            grad_norm,
            result.nit,
            tolerance,
        )
    return LogisticModel(
        weights=weights,
        biases=biases,
        l2_lambda=l2_lambda,
        class_weights=class_weights,
        encoding=train.encoding,
        diagnostics=TrainingDiagnostics(
            converged=converged,
            n_iters=int(result.nit),
            final_grad_max_norm=grad_norm,
            loss_history=tuple(loss_history),
        ),
    )


def predict_proba_logistic_batch(model: LogisticModel, features: np.ndarray) -> np.ndarray:
    """Softmax(W x + b) row-wise, renormalized on the producer side."""
    feats = np.atleast_2d(np.asarray(features, dtype=float))
    if feats.shape[1] != model.n_features:
        raise PipelineError(
            "DIMENSION_MISMATCH",
            f"got {feats.shape[1]} features, model expects {model.n_features}",
        )
    probs = _softmax_rows(feats @ model.weights.T + model.biases)
    return probs / probs.sum(axis=1, keepdims=True)


def predict_proba_logistic(model: LogisticModel, features) -> ProbabilityVector:
    probs = predict_proba_logistic_batch(model, np.asarray(features, dtype=float).reshape(1, -1))
    return validate_probability_vector(probs[0])
