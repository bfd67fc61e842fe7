"""Displacement-error metrics and the best-of-K evaluation protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..causal import InterventionSpec, causal_predict, factual_predict
from ..data import SceneWindow
from ..errors import ContractError
from ..models import STGATModel, decode_trajectory, sample_gaussian_displacements


@dataclass
class MetricsRecord:
    scene: str
    split: str
    k: int
    ade: float
    fde: float
    seed: int
    sec_per_window: float | None = None


def ade_fde(pred: np.ndarray, gt: np.ndarray, squared: bool = False) -> tuple[float, float]:
    """Average and final displacement errors (mean Euclidean distance).

    `squared` switches to mean squared distance for both values.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[2] != 2:
        raise ContractError(
            f"ade_fde requires matching (N, T, 2) arrays; got {pred.shape} "
            f"and {gt.shape}")
    dists = np.linalg.norm(pred - gt, axis=2)
    if squared:
        dists = dists ** 2
    return float(np.mean(dists)), float(np.mean(dists[:, -1]))


def candidate_predictions(model, window: SceneWindow, spec: InterventionSpec,
                          k: int, rng: np.random.Generator,
                          causal: bool = True) -> list[np.ndarray]:
    """K decoded candidate trajectories (N, 12, 2), drawn sequentially so a
    smaller K yields a prefix of a larger K under the same rng state."""
    if k < 1:
        raise ContractError("best-of-k requires k >= 1")
    candidates = []
    if isinstance(model, STGATModel) and model.config.noise_dim > 0:
        for _ in range(k):
            z = rng.standard_normal(model.config.noise_dim)
            bundle = (causal_predict(model, window, spec, z) if causal
                      else factual_predict(model, window, z))
            candidates.append(decode_trajectory(bundle.prediction.data, bundle.anchor))
        return candidates
    bundle = (causal_predict(model, window, spec) if causal
              else factual_predict(model, window))
    gauss = bundle.prediction_gaussian
    if gauss is None:
        decoded = decode_trajectory(bundle.prediction.data, bundle.anchor)
        return [decoded.copy() for _ in range(k)]
    for _ in range(k):
        disp = sample_gaussian_displacements(gauss, rng)
        candidates.append(decode_trajectory(disp, bundle.anchor))
    return candidates


def pick_best(candidates: list[np.ndarray], gt: np.ndarray) -> tuple[float, float, int]:
    """Minimum-ADE candidate; its own FDE is reported (joint selection)."""
    if not candidates:
        raise ContractError("no candidates to select from")
    best = None
    for idx, cand in enumerate(candidates):
        a, f = ade_fde(cand, gt)
        if best is None or a < best[0]:
            best = (a, f, idx)
    return best


def best_of_k(model, window: SceneWindow, spec: InterventionSpec, k: int,
              rng: np.random.Generator, causal: bool = True) -> tuple[float, float]:
    candidates = candidate_predictions(model, window, spec, k, rng, causal)
    a, f, _ = pick_best(candidates, window.fut)
    return a, f


METRICS_CSV_HEADER = "scene,split,k,ade,fde,seed,sec_per_window"


def write_metrics_csv(records: list[MetricsRecord]) -> str:
    lines = [METRICS_CSV_HEADER]
    for r in records:
        sec = "" if r.sec_per_window is None else f"{r.sec_per_window:.9f}"
        lines.append(f"{r.scene},{r.split},{r.k},{r.ade:.9f},{r.fde:.9f},{r.seed},{sec}")
    return "\n".join(lines) + "\n"


def read_metrics_csv(text: str) -> list[MetricsRecord]:
    records = []
    for line in text.splitlines():
        if not line or line == METRICS_CSV_HEADER:
            continue
        scene, split, k, ade, fde, seed, sec = line.split(",")
        records.append(MetricsRecord(
            scene=scene, split=split, k=int(k), ade=float(ade), fde=float(fde),
            seed=int(seed), sec_per_window=float(sec) if sec else None))
    return records
