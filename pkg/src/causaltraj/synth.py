"""Synthetic crowd scenes with a controllable dependence between an
environment context and pedestrian behavior.

Context-A walkers face a stationary obstacle (the environment clue);
context-B walkers do not. A-walkers turn left at the decision frame with
probability p, B-walkers with probability 1-p, so histories stay
uninformative while the interaction pattern carries the behavioral bias.
A train/test pair generated with different p values exhibits a known
environment gap for debiasing experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import OBS_LEN, PRED_LEN, SceneWindow
from .errors import ContractError

TOTAL_LEN = OBS_LEN + PRED_LEN
FRAME_STRIDE = 10  # frame ids advance by 10, matching the ingestion format


@dataclass(frozen=True)
class ScenarioConfig:
    n_scenes: int = 100
    peds_range: tuple[int, int] = (1, 3)
    bias_p: float = 0.9
    speed_range: tuple[float, float] = (0.3, 0.6)
    noise_scale: float = 0.05
    seed: int = 0
    turn_angle_deg: float = 60.0
    turn_frames: int = 3
    context_split: float = 0.5
    obstacle_ahead: float = 1.5
    parallel_rate: float = 0.0
    parallel_offset: float = 0.6
    gather_rate: float = 0.0
    arena: float = 20.0

    def validate(self) -> None:
        if not 0.0 <= self.bias_p <= 1.0:
            raise ContractError("bias probability must lie in [0, 1]")
        if self.peds_range[0] < 1 or self.peds_range[1] < self.peds_range[0]:
            raise ContractError("pedestrians-per-scene range must be >= 1 and ordered")
        if self.speed_range[0] <= 0 or self.speed_range[1] < self.speed_range[0]:
            raise ContractError("speed range must be positive and ordered")
        if self.n_scenes < 1:
            raise ContractError("need at least one scene")
        if not 0.0 <= self.context_split <= 1.0:
            raise ContractError("context split must lie in [0, 1]")
        if self.turn_frames < 1 or self.turn_frames > PRED_LEN:
            raise ContractError("turn frames must lie in [1, prediction length]")


@dataclass(frozen=True)
class AgentLabel:
    scene: str
    ped_id: int
    context: str    # A | B | prop
    behavior: str   # left | straight | static | parallel | approach


@dataclass
class SyntheticSceneSet:
    windows: list[SceneWindow]
    labels: list[AgentLabel] = field(default_factory=list)

    def label_map(self) -> dict[tuple[str, int], AgentLabel]:
        return {(lb.scene, lb.ped_id): lb for lb in self.labels}

    def left_turn_fraction(self, context: str) -> float:
        agents = [lb for lb in self.labels if lb.context == context]
        if not agents:
            return float("nan")
        return sum(lb.behavior == "left" for lb in agents) / len(agents)


def _walk(start: np.ndarray, angle: float, speed: float, turn_deg: float,
          turn_frames: int, rng: np.random.Generator, noise: float) -> np.ndarray:
    """One agent's 20 positions; a nonzero turn spreads over `turn_frames`
    steps starting at the first predicted frame."""
    positions = np.zeros((TOTAL_LEN, 2))
    positions[0] = start
    step_turn = np.radians(turn_deg) / turn_frames if turn_deg else 0.0
    a = angle
    for t in range(1, TOTAL_LEN):
        if turn_deg and OBS_LEN <= t < OBS_LEN + turn_frames:
            a += step_turn
        positions[t] = positions[t - 1] + speed * np.array([np.cos(a), np.sin(a)])
    if noise > 0:
        positions = positions + rng.normal(0.0, noise, positions.shape)
    return positions


def _generate_scene(config: ScenarioConfig, scene: str,
                    rng: np.random.Generator) -> tuple[SceneWindow, list[AgentLabel]]:
    tracks: list[np.ndarray] = []
    labels: list[AgentLabel] = []
    n_walkers = int(rng.integers(config.peds_range[0], config.peds_range[1] + 1))
    next_id = 1

    def emit(track: np.ndarray, context: str, behavior: str) -> None:
        nonlocal next_id
        tracks.append(track)
        labels.append(AgentLabel(scene, next_id, context, behavior))
        next_id += 1

    for _ in range(n_walkers):
        start = rng.uniform(0.0, config.arena, 2)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        speed = rng.uniform(*config.speed_range)
        context = "A" if rng.random() < config.context_split else "B"
        p_left = config.bias_p if context == "A" else 1.0 - config.bias_p
        turns = rng.random() < p_left
        track = _walk(start, angle, speed, config.turn_angle_deg if turns else 0.0,
                      config.turn_frames, rng, config.noise_scale)
        emit(track, context, "left" if turns else "straight")
        heading = np.array([np.cos(angle), np.sin(angle)])
        if context == "A":
            # the environment clue: a static neighbor ahead of the decision point
            spot = track[OBS_LEN - 1] + heading * config.obstacle_ahead
            emit(np.tile(spot, (TOTAL_LEN, 1)), "prop", "static")
        if rng.random() < config.parallel_rate:
            side = np.array([-heading[1], heading[0]]) * config.parallel_offset
            companion = _walk(start + side, angle, speed, 0.0,
                              config.turn_frames, rng, config.noise_scale)
            emit(companion, "prop", "parallel")
        if rng.random() < config.gather_rate:
            target = track[-1]
            offset_angle = rng.uniform(0.0, 2.0 * np.pi)
            distance = rng.uniform(4.0, 6.0)
            partner_start = target + distance * np.array(
                [np.cos(offset_angle), np.sin(offset_angle)])
            toward = np.arctan2(*(target - partner_start)[::-1])
            partner = _walk(partner_start, toward, distance / (TOTAL_LEN - 1) * 0.9,
                            0.0, config.turn_frames, rng, config.noise_scale)
            emit(partner, "prop", "approach")

    positions = np.stack(tracks)
    window = SceneWindow(
        scene=scene,
        ped_ids=np.arange(1, len(tracks) + 1, dtype=np.int64),
        obs=positions[:, :OBS_LEN].copy(),
        fut=positions[:, OBS_LEN:].copy(),
    )
    window.validate()
    return window, labels


def generate(config: ScenarioConfig, prefix: str = "synth") -> SyntheticSceneSet:
    """Deterministic scene set: same seed, same bytes."""
    config.validate()
    streams = np.random.SeedSequence(config.seed).spawn(config.n_scenes)
    windows = []
    labels: list[AgentLabel] = []
    for i, stream in enumerate(streams):
        scene = f"{prefix}-{i:04d}"
        window, scene_labels = _generate_scene(config, scene,
                                               np.random.default_rng(stream))
        windows.append(window)
        labels.extend(scene_labels)
    return SyntheticSceneSet(windows=windows, labels=labels)


def biased_pair(config: ScenarioConfig, p_train: float,
                p_test: float) -> tuple[SyntheticSceneSet, SyntheticSceneSet]:
    """Structurally identical sets with different bias probabilities and
    disjoint generator seeds."""
    if not (0.0 <= p_train <= 1.0 and 0.0 <= p_test <= 1.0):
        raise ContractError("bias probabilities must lie in [0, 1]")
    seeds = np.random.default_rng(config.seed).integers(2 ** 62, size=2)
    train_set = generate(replace(config, bias_p=p_train, seed=int(seeds[0])),
                         prefix="train")
    test_set = generate(replace(config, bias_p=p_test, seed=int(seeds[1])),
                        prefix="test")
    return train_set, test_set


def write_scene_set(scene_set: SyntheticSceneSet, directory) -> None:
    """One ingestion-format text file per scene plus a label sidecar CSV."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for window in scene_set.windows:
        lines = []
        positions = np.concatenate([window.obs, window.fut], axis=1)
        for t in range(TOTAL_LEN):
            for p, ped in enumerate(window.ped_ids):
                x, y = positions[p, t]
                lines.append(f"{t * FRAME_STRIDE} {int(ped)} {x:.6f} {y:.6f}")
        (directory / f"{window.scene}.txt").write_text("\n".join(lines) + "\n",
                                                       encoding="utf-8")
    label_lines = ["scene,ped_id,context,behavior"]
    for lb in scene_set.labels:
        label_lines.append(f"{lb.scene},{lb.ped_id},{lb.context},{lb.behavior}")
    (directory / "labels.csv").write_text("\n".join(label_lines) + "\n",
                                          encoding="utf-8")
