from .external import ExternalProbabilities, load_external_probabilities
from .forest import ForestModel, predict_proba_forest, train_forest
from .logistic import (
    LogisticModel,
    TrainingDiagnostics,
    loss_and_gradient,
    predict_proba_logistic,
    train_logistic,
)

__all__ = [
    "ExternalProbabilities",
    "ForestModel",
    "LogisticModel",
    "TrainingDiagnostics",
    "load_external_probabilities",
    "loss_and_gradient",
    "predict_proba_forest",
    "predict_proba_logistic",
    "train_forest",
    "train_logistic",
]
