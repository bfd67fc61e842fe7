"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .data import OBS_LEN, PRED_LEN, SceneWindow
from .errors import ContractError


def check_window(window) -> SceneWindow:
    if not isinstance(window, SceneWindow):
        raise ContractError(
            f"expected a SceneWindow, got {type(window).__name__}")
    window.validate()
    return window


def check_windows(X) -> list[SceneWindow]:
    """Validate a window collection (the estimator's X)."""
    if isinstance(X, SceneWindow):
        X = [X]
    windows = [check_window(w) for w in X]
    if not windows:
        raise ContractError("expected at least one SceneWindow")
    return windows


def check_positions(arr, steps: int, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1] != steps or arr.shape[2] != 2:
        raise ContractError(f"{name} must have shape (N, {steps}, 2); got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite values")
    return arr


def window_from_arrays(scene: str, obs, fut, ped_ids=None) -> SceneWindow:
    """Assemble a validated SceneWindow from raw position arrays."""
    obs = check_positions(obs, OBS_LEN, "observed positions")
    fut = check_positions(fut, PRED_LEN, "future positions")
    if obs.shape[0] != fut.shape[0]:
        raise ContractError(
            f"observed ({obs.shape[0]}) and future ({fut.shape[0]}) "
            f"pedestrian counts differ")
    if ped_ids is None:
        ped_ids = np.arange(1, obs.shape[0] + 1)
    window = SceneWindow(scene=scene, ped_ids=np.asarray(ped_ids, dtype=np.int64),
                         obs=obs, fut=fut)
    window.validate()
    return window
