"""Training loop, leave-one-out evaluation, and inference timing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..causal import (
    Discriminator,
    InterventionSpec,
    causal_nll_loss,
    causal_l2_loss,
    causal_predict,
    factual_predict,
    gan_step_losses,
    variety_loss,
)
from ..config import TrainConfig, normalize_config, parse_config
from ..data import DatasetSplit, SceneWindow
from ..errors import ContractError, NumericError
from ..grad import OptimizerState, Tape, adam_step, backward, clip_global_norm
from ..models import STGATModel, build_model, decode_trajectory, model_from_state
from .checkpoint import Checkpoint
from .metrics import MetricsRecord, ade_fde, best_of_k


@dataclass
class LogEntry:
    epoch: int
    train_loss: float
    val_ade: float
    val_fde: float

    def line(self) -> str:
        return f"{self.epoch},{self.train_loss:.9f},{self.val_ade:.9f},{self.val_fde:.9f}"


@dataclass
class TrainResult:
    final: Checkpoint
    best: Checkpoint
    log: list[LogEntry] = field(default_factory=list)


def _draw_noise(model, rng: np.random.Generator) -> np.ndarray | None:
    if isinstance(model, STGATModel) and model.config.noise_dim > 0:
        return rng.standard_normal(model.config.noise_dim)
    return None


def _window_bundle(model, window: SceneWindow, spec: InterventionSpec,
                   z: np.ndarray | None, causal: bool):
    if causal:
        return causal_predict(model, window, spec, z)
    return factual_predict(model, window, z)


def point_prediction(model, window: SceneWindow, spec: InterventionSpec,
                     causal: bool = True) -> np.ndarray:
    """Deterministic decoded prediction (zero noise / distribution mean)."""
    bundle = _window_bundle(model, window, spec, None, causal)
    return decode_trajectory(bundle.prediction.data, bundle.anchor)


def _scalar_mean(terms):
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total / float(len(terms))


def _snapshot(config: TrainConfig, model, opt: OptimizerState,
              spec: InterventionSpec, train_step: int) -> Checkpoint:
    return Checkpoint(
        family=config.model.family,
        config_text=normalize_config(config),
        params=model.store.state_dict(),
        opt_m={k: v.copy() for k, v in opt.m.items()},
        opt_v={k: v.copy() for k, v in opt.v.items()},
        opt_hyper={"learning_rate": opt.learning_rate, "beta1": opt.beta1,
                   "beta2": opt.beta2, "epsilon": opt.epsilon},
        opt_step=opt.step,
        running_mean=None if spec.running_mean is None else spec.running_mean.copy(),
        train_step=train_step,
    )


def validate_windows(model, spec: InterventionSpec, windows: list[SceneWindow],
                     causal: bool) -> tuple[float, float]:
    """Deterministic point-prediction ADE/FDE over a window list."""
    if not windows:
        return float("nan"), float("nan")
    eval_spec = spec.eval_clone()
    ades, fdes = [], []
    for window in windows:
        pred = point_prediction(model, window, eval_spec, causal)
        a, f = ade_fde(pred, window.fut)
        ades.append(a)
        fdes.append(f)
    return float(np.mean(ades)), float(np.mean(fdes))


def train(config: TrainConfig, split: DatasetSplit) -> TrainResult:
    """Mini-batch optimization of the configured objective.

    The log records one entry per epoch; final and best (lowest validation
    ADE) checkpoints are returned. A NaN/Inf anywhere aborts with the
    offending step index.
    """
    config.validate()
    if not split.train:
        raise ContractError("training split has no windows")
    ss = np.random.SeedSequence(config.seed)
    model_s, disc_s, shuffle_s, noise_s, iv_s = ss.spawn(5)
    model = build_model(config.model, np.random.default_rng(model_s))
    spec = InterventionSpec(
        mode=config.intervention, phase="train", half_width=config.half_width,
        mean_decay=config.mean_decay, rng=np.random.default_rng(iv_s))
    opt = OptimizerState(learning_rate=config.learning_rate)
    disc = disc_opt = None
    if config.objective == "causal_gan":
        disc = Discriminator.init(np.random.default_rng(disc_s))
        disc_opt = OptimizerState(learning_rate=config.learning_rate)
    shuffle_rng = np.random.default_rng(shuffle_s)
    noise_rng = np.random.default_rng(noise_s)

    windows = list(split.train)
    log: list[LogEntry] = []
    best: Checkpoint | None = None
    best_ade = float("inf")
    step_index = 0
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(windows))
        epoch_losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [windows[i] for i in order[start:start + config.batch_size]]
            step_index += 1
            try:
                loss_value = _train_step(model, disc, batch, spec, noise_rng,
                                         config, opt, disc_opt)
            except NumericError as exc:
                raise NumericError(f"{exc} (training step {step_index})") from None
            epoch_losses.append(loss_value)
        val_ade, val_fde = validate_windows(model, spec, split.test, config.causal)
        log.append(LogEntry(epoch, float(np.mean(epoch_losses)), val_ade, val_fde))
        selector = val_ade if split.test else float(np.mean(epoch_losses))
        if selector < best_ade:
            best_ade = selector
            best = _snapshot(config, model, opt, spec, step_index)
    final = _snapshot(config, model, opt, spec, step_index)
    if best is None:
        best = final
    return TrainResult(final=final, best=best, log=log)


def _train_step(model, disc, batch, spec, noise_rng, config, opt, disc_opt) -> float:
    gen_terms = []
    disc_terms = []
    tape = Tape()
    with tape:
        for window in batch:
            y = window.fut
            if config.objective == "variety_k":
                bundles = [
                    _window_bundle(model, window, spec,
                                   _draw_noise(model, noise_rng), config.causal)
                    for _ in range(config.variety_k)]
                gen_terms.append(variety_loss(y, bundles))
                continue
            z = _draw_noise(model, noise_rng)
            bundle = _window_bundle(model, window, spec, z, config.causal)
            if config.objective == "causal_l2":
                gen_terms.append(causal_l2_loss(y, bundle))
            elif config.objective == "causal_nll":
                gen_terms.append(causal_nll_loss(y, bundle))
            else:  # causal_gan
                g, d = gan_step_losses(disc, y, bundle)
                gen_terms.append(g)
                disc_terms.append(d)
        loss = _scalar_mean(gen_terms)
        disc_loss = _scalar_mean(disc_terms) if disc_terms else None
    grads = backward(loss, tape, model.store)
    clip_global_norm(grads, config.clip_norm)
    adam_step(model.store, grads, opt)
    if disc_loss is not None:
        disc_grads = backward(disc_loss, tape, disc.store)
        clip_global_norm(disc_grads, config.clip_norm)
        adam_step(disc.store, disc_grads, disc_opt)
    return float(loss.data)


def model_from_checkpoint(checkpoint: Checkpoint):
    config = parse_config(checkpoint.config_text)
    return model_from_state(config.model, checkpoint.params), config


def evaluate(checkpoint: Checkpoint, split: DatasetSplit, k: int,
             seeds: tuple[int, ...] = (0,),
             on: str = "test") -> tuple[list[MetricsRecord], list[MetricsRecord]]:
    """Best-of-K protocol over a split's windows.

    Returns (per-window records, per-scene aggregate records). The
    intervention runs in the eval phase with the checkpointed running mean.
    """
    if k < 1:
        raise ContractError("evaluation requires k >= 1")
    model, config = model_from_checkpoint(checkpoint)
    windows = split.test if on == "test" else split.train
    spec = InterventionSpec(
        mode=config.intervention, phase="eval", half_width=config.half_width,
        mean_decay=config.mean_decay, running_mean=checkpoint.running_mean)
    records: list[MetricsRecord] = []
    for seed in seeds:
        for widx, window in enumerate(windows):
            rng = np.random.default_rng([seed, widx])
            ade, fde = best_of_k(model, window, spec, k, rng, config.causal)
            records.append(MetricsRecord(
                scene=window.scene, split=split.held_out, k=k,
                ade=ade, fde=fde, seed=seed))
    aggregates: list[MetricsRecord] = []
    for seed in seeds:
        seed_records = [r for r in records if r.seed == seed]
        scenes = sorted({r.scene for r in seed_records})
        for scene in scenes:
            rs = [r for r in seed_records if r.scene == scene]
            aggregates.append(MetricsRecord(
                scene=scene, split=f"{split.held_out}-mean", k=k,
                ade=float(np.mean([r.ade for r in rs])),
                fde=float(np.mean([r.fde for r in rs])),
                seed=seed))
    return records, aggregates


def time_inference(model, windows: list[SceneWindow], repetitions: int = 3,
                   spec: InterventionSpec | None = None,
                   causal: bool = True) -> tuple[float, list[float]]:
    """Mean wall-clock seconds per window at batch size 1."""
    if repetitions < 1:
        raise ContractError("repetitions must be >= 1")
    if not windows:
        raise ContractError("timing requires at least one window")
    if spec is None:
        spec = InterventionSpec(mode="zero", phase="eval")
    per_rep = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        for window in windows:
            point_prediction(model, window, spec, causal)
        per_rep.append((time.perf_counter() - t0) / len(windows))
    return float(np.mean(per_rep)), per_rep
