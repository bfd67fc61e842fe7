"""Training, evaluation protocol, checkpointing, and timing."""

from .checkpoint import Checkpoint, checkpoint_load, checkpoint_save, config_digest
from .metrics import (
    METRICS_CSV_HEADER,
    MetricsRecord,
    ade_fde,
    best_of_k,
    candidate_predictions,
    pick_best,
    read_metrics_csv,
    write_metrics_csv,
)
from .training import (
    LogEntry,
    TrainResult,
    evaluate,
    model_from_checkpoint,
    point_prediction,
    time_inference,
    train,
    validate_windows,
)

__all__ = [
    "Checkpoint", "checkpoint_load", "checkpoint_save", "config_digest",
    "METRICS_CSV_HEADER", "MetricsRecord", "ade_fde", "best_of_k",
    "candidate_predictions", "pick_best", "read_metrics_csv",
    "write_metrics_csv",
    "LogEntry", "TrainResult", "evaluate", "model_from_checkpoint",
    "point_prediction", "time_inference", "train", "validate_windows",
]
