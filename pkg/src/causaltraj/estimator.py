"""Scikit-learn style estimator wrapping the training and evaluation
pipeline, so the predictor composes with the wider ecosystem
(`get_params`/`set_params`, `fit`/`predict`/`score`)."""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator

from .causal import InterventionSpec
from .config import TrainConfig
from .data import DatasetSplit, SceneWindow
from .errors import ContractError
from .harness import (
    Checkpoint,
    MetricsRecord,
    best_of_k,
    evaluate,
    model_from_checkpoint,
    point_prediction,
    train,
)
from .models import ModelConfig, count_parameters
from .validation import check_windows


class TrajectoryForecaster(BaseEstimator):
    """Trainable trajectory predictor with optional counterfactual analysis.

    Parameters mirror the training configuration; `fit` consumes a list of
    SceneWindow instances (the windows carry their own targets), `predict`
    returns one (N, 12, 2) array of future positions per window.
    """

    def __init__(self, family: str = "stgat", causal: bool = True,
                 intervention: str = "zero", objective: str = "causal_l2",
                 epochs: int = 20, batch_size: int = 32,
                 learning_rate: float = 1e-3, clip_norm: float = 10.0,
                 variety_k: int = 5, seed: int = 0):
        self.family = family
        self.causal = causal
        self.intervention = intervention
        self.objective = objective
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.clip_norm = clip_norm
        self.variety_k = variety_k
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        if self.family == "stgcnn":
            model = ModelConfig.stgcnn_default()
        elif self.family == "stgat":
            model = ModelConfig.stgat_default()
        else:
            raise ContractError(f"unknown family '{self.family}'")
        return TrainConfig(
            model=model, intervention=self.intervention, causal=self.causal,
            objective=self.objective, epochs=self.epochs,
            batch_size=self.batch_size, learning_rate=self.learning_rate,
            clip_norm=self.clip_norm, variety_k=self.variety_k, seed=self.seed)

    def fit(self, X, y=None, validation=None) -> "TrajectoryForecaster":
        """Train on a list of SceneWindow; `validation` windows, when given,
        drive best-checkpoint selection."""
        windows = check_windows(X)
        val = check_windows(validation) if validation is not None else []
        config = self._train_config()
        config.validate()
        split = DatasetSplit(held_out="fit", train=windows, test=val)
        result = train(config, split)
        self.checkpoint_: Checkpoint = result.best
        self.log_ = result.log
        self.n_parameters_ = self.checkpoint_.parameter_count()
        return self

    def _require_fitted(self):
        if not hasattr(self, "checkpoint_"):
            raise ContractError("estimator is not fitted; call fit first")
        return model_from_checkpoint(self.checkpoint_)

    def _eval_spec(self, config: TrainConfig) -> InterventionSpec:
        return InterventionSpec(
            mode=config.intervention, phase="eval",
            half_width=config.half_width, mean_decay=config.mean_decay,
            running_mean=self.checkpoint_.running_mean)

    def predict(self, X) -> list[np.ndarray]:
        """Deterministic point predictions (zero noise / distribution mean)."""
        model, config = self._require_fitted()
        spec = self._eval_spec(config)
        return [point_prediction(model, w, spec, config.causal)
                for w in check_windows(X)]

    def evaluate(self, X, k: int = 20, seed: int = 0) -> list[MetricsRecord]:
        """Best-of-K records for each window."""
        self._require_fitted()
        split = DatasetSplit(held_out="eval", train=[], test=check_windows(X))
        records, _ = evaluate(self.checkpoint_, split, k, seeds=(seed,))
        return records

    def score(self, X, y=None) -> float:
        """Negative mean point-prediction ADE (greater is better)."""
        model, config = self._require_fitted()
        spec = self._eval_spec(config)
        windows = check_windows(X)
        ades = []
        for w in windows:
            rng = np.random.default_rng(self.seed)
            ade, _ = best_of_k(model, w, spec, 1, rng, config.causal)
            ades.append(ade)
        return -float(np.mean(ades))

    def parameter_count(self) -> int:
        """Analytic trainable-scalar count for the configured model."""
        return count_parameters(self._train_config().model)
