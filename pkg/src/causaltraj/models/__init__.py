"""Predictor families and their shared building blocks."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..grad import ParameterStore
from .config import (
    FAMILIES,
    GAUSSIAN_DIM,
    INPUT_DIM,
    INPUT_STEPS,
    ModelConfig,
    count_parameters,
)
from .layers import adjacency_from_positions, gat_layer, lstm_cell
from .output import (
    GaussianParams,
    decode_trajectory,
    sample_bivariate,
    sample_gaussian_displacements,
)
from .stgat import STGATModel, init_stgat_params
from .stgcnn import STGCNNModel, init_stgcnn_params

Model = STGATModel | STGCNNModel


def build_model(config: ModelConfig, rng: np.random.Generator) -> Model:
    config.validate()
    if config.family == "stgat":
        return STGATModel.init(config, rng)
    return STGCNNModel.init(config, rng)


def model_from_state(config: ModelConfig, state: dict[str, np.ndarray]) -> Model:
    """Rebuild a model from checkpointed parameter arrays."""
    model = build_model(config, np.random.default_rng(0))
    model.store.load_state_dict(state)
    return model


__all__ = [
    "FAMILIES", "GAUSSIAN_DIM", "INPUT_DIM", "INPUT_STEPS",
    "ModelConfig", "count_parameters",
    "adjacency_from_positions", "gat_layer", "lstm_cell",
    "GaussianParams", "decode_trajectory", "sample_bivariate",
    "sample_gaussian_displacements",
    "STGATModel", "STGCNNModel", "init_stgat_params", "init_stgcnn_params",
    "Model", "build_model", "model_from_state",
]
