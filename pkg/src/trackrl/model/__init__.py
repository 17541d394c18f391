"""Learned dynamics: normalization, probabilistic ensemble, split prediction."""

from .ensemble import MODEL_IN, ModelConfig, ProbabilisticEnsemble, \
    ensemble_nll_loss, model_inputs, train_ensemble
from .normalizer import Normalizer
from .split import (
    TrueRatesModel,
    imagined_observation,
    rollout_returns,
    split_step,
    transition_dataset,
)

__all__ = [
    "MODEL_IN",
    "ModelConfig",
    "ensemble_nll_loss",
    "Normalizer",
    "ProbabilisticEnsemble",
    "TrueRatesModel",
    "imagined_observation",
    "model_inputs",
    "rollout_returns",
    "split_step",
    "transition_dataset",
    "train_ensemble",
]
