"""Counterfactual-analysis trajectory prediction toolkit.

Dual factual/counterfactual forward passes through small sequence
predictors, causal subtraction of the two predictions, training on the
causal prediction, and evaluation under the standard pedestrian
forecasting protocol plus a controlled synthetic environment-bias
benchmark.
"""

__version__ = "0.1.0"

from .causal import (
    Discriminator,
    InterventionSpec,
    PredictionBundle,
    causal_l2_loss,
    causal_nll_loss,
    causal_predict,
    factual_predict,
    gan_step_losses,
    make_intervention,
    variety_loss,
)
from .config import TrainConfig, normalize_config, parse_config
from .data import (
    BiasReport,
    BiasThresholds,
    DatasetSplit,
    RawObservation,
    SceneWindow,
    bias_stats,
    build_windows,
    from_relative,
    leave_one_out,
    parse_dataset_file,
    to_relative,
)
from .estimator import TrajectoryForecaster
from .harness import (
    Checkpoint,
    MetricsRecord,
    ade_fde,
    best_of_k,
    checkpoint_load,
    checkpoint_save,
    evaluate,
    time_inference,
    train,
)
from .models import (
    GaussianParams,
    ModelConfig,
    adjacency_from_positions,
    build_model,
    count_parameters,
    decode_trajectory,
    sample_bivariate,
)
from .synth import ScenarioConfig, SyntheticSceneSet, biased_pair, generate

__all__ = [
    "__version__",
    "Discriminator", "InterventionSpec", "PredictionBundle",
    "causal_l2_loss", "causal_nll_loss", "causal_predict", "factual_predict",
    "gan_step_losses", "make_intervention", "variety_loss",
    "TrainConfig", "normalize_config", "parse_config",
    "BiasReport", "BiasThresholds", "DatasetSplit", "RawObservation",
    "SceneWindow", "bias_stats", "build_windows", "from_relative",
    "leave_one_out", "parse_dataset_file", "to_relative",
    "TrajectoryForecaster",
    "Checkpoint", "MetricsRecord", "ade_fde", "best_of_k",
    "checkpoint_load", "checkpoint_save", "evaluate", "time_inference", "train",
    "GaussianParams", "ModelConfig", "adjacency_from_positions", "build_model",
    "count_parameters", "decode_trajectory", "sample_bivariate",
    "ScenarioConfig", "SyntheticSceneSet", "biased_pair", "generate",
]
