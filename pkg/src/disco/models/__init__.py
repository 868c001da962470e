"""Uncertainty-aware regressors: a deep MLP ensemble and a random forest."""

from .forest import RandomForestModel, RegressionTree, rf_predict, train_random_forest
from .mlp import (
    DEFAULT_HIDDEN_GRID,
    EnsembleMlp,
    MlpMember,
    TrainConfig,
    TrainMeta,
    badge_gradient_embedding,
    penultimate_embeddings,
    predict_ensemble,
    train_mlp_ensemble,
    variance_gradient,
    variance_gradient_wrt_input,
)
from .output import EmbeddingMatrix, EstimatorOutput

__all__ = [
    "DEFAULT_HIDDEN_GRID",
    "EmbeddingMatrix",
    "EnsembleMlp",
    "EstimatorOutput",
    "MlpMember",
    "RandomForestModel",
    "RegressionTree",
    "TrainConfig",
    "TrainMeta",
    "badge_gradient_embedding",
    "penultimate_embeddings",
    "predict_ensemble",
    "rf_predict",
    "train_mlp_ensemble",
    "train_random_forest",
    "variance_gradient",
    "variance_gradient_wrt_input",
]
