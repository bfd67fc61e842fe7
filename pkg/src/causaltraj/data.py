"""Trajectory file ingestion, windowing, coordinate conversion, splits,
and environment-interaction statistics.

Input files are plain text, one observation per line, whitespace-separated
columns ``frame_id pedestrian_id x y`` (meters, 0.4 s frame step).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, IntegrityError, ParseError

OBS_LEN = 8
PRED_LEN = 12
FRAME_STEP_SECONDS = 0.4

ETH_UCY_SCENES = ("ETH", "HOTEL", "UNIV", "ZARA1", "ZARA2")


@dataclass(frozen=True)
class RawObservation:
    frame: int
    ped: int
    x: float
    y: float


@dataclass
class SceneWindow:
    """One prediction instance: N pedestrians over 8 observed + 12 future frames."""

    scene: str
    ped_ids: np.ndarray          # (N,) int
    obs: np.ndarray              # (N, 8, 2) observed positions, meters
    fut: np.ndarray              # (N, 12, 2) future positions, meters
    frame_step: float = FRAME_STEP_SECONDS

    @property
    def n_peds(self) -> int:
        return len(self.ped_ids)

    def validate(self) -> None:
        if self.n_peds < 1:
            raise ContractError("SceneWindow requires at least one pedestrian")
        if self.obs.shape != (self.n_peds, OBS_LEN, 2):
            raise ContractError(f"observed positions have shape {self.obs.shape}")
        if self.fut.shape != (self.n_peds, PRED_LEN, 2):
            raise ContractError(f"future positions have shape {self.fut.shape}")
        if not (np.all(np.isfinite(self.obs)) and np.all(np.isfinite(self.fut))):
            raise ContractError("positions must be finite")


@dataclass
class DatasetSplit:
    held_out: str
    train: list[SceneWindow]
    test: list[SceneWindow]


@dataclass(frozen=True)
class BiasThresholds:
    """Interaction-statistic thresholds (meters / degrees)."""

    neighbor_radius: float = 3.0
    parallel_heading_deg: float = 15.0
    parallel_distance: float = 2.0
    meet_far: float = 4.0
    meet_near: float = 1.0
    gather_final: float = 2.0

    def validate(self) -> None:
        for name, value in self.__dict__.items():
            if value <= 0:
                raise ContractError(f"threshold {name} must be positive")


@dataclass
class BiasReport:
    environment: str
    neighbors_avg: float
    parallel_avg: float
    meet_avg: float
    gather_avg: float
    thresholds: BiasThresholds = field(default_factory=BiasThresholds)


def parse_dataset_file(stream) -> list[RawObservation]:
    """Parse whitespace-separated `frame ped x y` rows.

    Accepts a text stream or a string. Raises ParseError with the line
    number on malformed rows and IntegrityError on duplicate
    (frame, pedestrian) pairs.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    observations: list[RawObservation] = []
    seen: set[tuple[int, int]] = set()
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 4:
            raise ParseError(f"expected 4 columns, got {len(parts)}", lineno)
        try:
            frame = int(float(parts[0]))
            ped = int(float(parts[1]))
            x = float(parts[2])
            y = float(parts[3])
        except ValueError as exc:
            raise ParseError(f"non-numeric value ({exc})", lineno) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError("non-finite coordinate", lineno)
        key = (frame, ped)
        if key in seen:
            raise IntegrityError(
                f"duplicate observation for frame {frame}, pedestrian {ped}")
        seen.add(key)
        observations.append(RawObservation(frame, ped, x, y))
    return observations


def load_scene_file(path) -> tuple[str, list[RawObservation]]:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        return path.stem, parse_dataset_file(fh)


def build_windows(observations: list[RawObservation], scene: str,
                  t_obs: int = OBS_LEN, t_pred: int = PRED_LEN,
                  stride: int = 1) -> list[SceneWindow]:
    """Slide a (t_obs + t_pred)-frame window over the frame progression.

    A window is emitted at each stride offset where at least one pedestrian
    is present in all of its frames; pedestrians not spanning the whole
    window are excluded from it.
    """
    if stride < 1:
        raise ContractError("stride must be >= 1")
    if not observations:
        return []
    frames = sorted({o.frame for o in observations})
    if len(frames) > 1:
        step = frames[1] - frames[0]
        diffs = np.diff(frames)
        if step <= 0 or np.any(diffs != step):
            raise IntegrityError(
                f"frame ids are not an arithmetic progression in scene '{scene}'")
    frame_index = {f: i for i, f in enumerate(frames)}
    length = t_obs + t_pred

    # positions[ped] = (T_total, 2) with NaN where unobserved
    by_ped: dict[int, np.ndarray] = {}
    for o in observations:
        track = by_ped.get(o.ped)
        if track is None:
            track = np.full((len(frames), 2), np.nan)
            by_ped[o.ped] = track
        track[frame_index[o.frame]] = (o.x, o.y)

    windows: list[SceneWindow] = []
    for start in range(0, len(frames) - length + 1, stride):
        ids = []
        tracks = []
        for ped in sorted(by_ped):
            segment = by_ped[ped][start:start + length]
            if not np.any(np.isnan(segment)):
                ids.append(ped)
                tracks.append(segment)
        if not ids:
            continue
        positions = np.stack(tracks)  # (N, length, 2)
        windows.append(SceneWindow(
            scene=scene,
            ped_ids=np.asarray(ids, dtype=np.int64),
            obs=positions[:, :t_obs].copy(),
            fut=positions[:, t_obs:].copy(),
        ))
    return windows


def to_relative(positions: np.ndarray) -> np.ndarray:
    """Per-frame displacements: d[t] = p[t+1] - p[t]. Requires T >= 2."""
    positions = np.asarray(positions, dtype=np.float64)
    if positions.shape[-2] < 2:
        raise ContractError("to_relative requires at least two positions")
    return np.diff(positions, axis=-2)


def from_relative(displacements: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    """Invert to_relative: anchor first, then cumulative sums."""
    displacements = np.asarray(displacements, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    anchored = np.expand_dims(anchor, axis=-2)
    return np.concatenate([anchored, anchored + np.cumsum(displacements, axis=-2)],
                          axis=-2)


def leave_one_out(scene_windows: dict[str, list[SceneWindow]]) -> list[DatasetSplit]:
    """One split per scene: that scene's windows test, all others train."""
    names = list(scene_windows)
    if len(names) < 2:
        raise ContractError("leave-one-out requires at least 2 scenes")
    splits = []
    for held in names:
        train: list[SceneWindow] = []
        for other in names:
            if other != held:
                train.extend(scene_windows[other])
        splits.append(DatasetSplit(held_out=held, train=train,
                                   test=list(scene_windows[held])))
    return splits


def _pair_series(window: SceneWindow, i: int, j: int):
    """Full 20-frame position series for pedestrians i and j."""
    pi = np.concatenate([window.obs[i], window.fut[i]])
    pj = np.concatenate([window.obs[j], window.fut[j]])
    return pi, pj


def _mean_heading_difference_deg(pi: np.ndarray, pj: np.ndarray) -> float:
    """Mean absolute heading difference over frames where both move."""
    di = np.diff(pi, axis=0)
    dj = np.diff(pj, axis=0)
    ni = np.linalg.norm(di, axis=1)
    nj = np.linalg.norm(dj, axis=1)
    moving = (ni > 1e-9) & (nj > 1e-9)
    if not np.any(moving):
        return float("inf")
    cos = np.sum(di[moving] * dj[moving], axis=1) / (ni[moving] * nj[moving])
    angles = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    return float(np.mean(angles))


def bias_stats(windows: list[SceneWindow], environment: str,
               thresholds: BiasThresholds | None = None) -> BiasReport:
    """Per-pedestrian interaction averages across an environment's windows.

    For each pedestrian instance, counts the other pedestrians that are a
    neighbor (within radius at any frame), a parallel partner (small mean
    heading difference and separation), a meeting partner (separation falls
    from far to near within the window), or a gathering partner (negative
    linear-fit separation slope and near final separation).
    """
    th = thresholds or BiasThresholds()
    th.validate()
    neighbor_counts: list[int] = []
    parallel_counts: list[int] = []
    meet_counts: list[int] = []
    gather_counts: list[int] = []
    times = np.arange(OBS_LEN + PRED_LEN, dtype=np.float64)
    for window in windows:
        n = window.n_peds
        neighbors = np.zeros(n, dtype=int)
        parallel = np.zeros(n, dtype=int)
        meets = np.zeros(n, dtype=int)
        gathers = np.zeros(n, dtype=int)
        for i in range(n):
            for j in range(i + 1, n):
                pi, pj = _pair_series(window, i, j)
                sep = np.linalg.norm(pi - pj, axis=1)
                if np.min(sep) < th.neighbor_radius:
                    neighbors[i] += 1
                    neighbors[j] += 1
                if (np.mean(sep) < th.parallel_distance
                        and _mean_heading_difference_deg(pi, pj) < th.parallel_heading_deg):
                    parallel[i] += 1
                    parallel[j] += 1
                far = np.where(sep > th.meet_far)[0]
                if far.size and np.any(sep[far[0]:] < th.meet_near):
                    meets[i] += 1
                    meets[j] += 1
                slope = np.polyfit(times, sep, 1)[0]
                if slope < 0 and sep[-1] < th.gather_final:
                    gathers[i] += 1
                    gathers[j] += 1
        neighbor_counts.extend(neighbors)
        parallel_counts.extend(parallel)
        meet_counts.extend(meets)
        gather_counts.extend(gathers)

    def avg(counts: list[int]) -> float:
        return float(np.mean(counts)) if counts else 0.0

    return BiasReport(
        environment=environment,
        neighbors_avg=avg(neighbor_counts),
        parallel_avg=avg(parallel_counts),
        meet_avg=avg(meet_counts),
        gather_avg=avg(gather_counts),
        thresholds=th,
    )


BIAS_CSV_HEADER = "environment,neighbors_avg,parallel_avg,meet_avg,gather_avg"


def write_bias_reports_csv(reports: list[BiasReport]) -> str:
    """CSV text with a threshold comment line followed by a header row."""
    if reports:
        th = reports[0].thresholds
    else:
        th = BiasThresholds()
    lines = [
        "# thresholds: "
        f"neighbor_radius={th.neighbor_radius} "
        f"parallel_heading_deg={th.parallel_heading_deg} "
        f"parallel_distance={th.parallel_distance} "
        f"meet_far={th.meet_far} meet_near={th.meet_near} "
        f"gather_final={th.gather_final}",
        BIAS_CSV_HEADER,
    ]
    for r in reports:
        lines.append(f"{r.environment},{r.neighbors_avg:.6f},{r.parallel_avg:.6f},"
                     f"{r.meet_avg:.6f},{r.gather_avg:.6f}")
    return "\n".join(lines) + "\n"


def read_bias_reports_csv(text: str) -> list[BiasReport]:
    reports = []
    for line in text.splitlines():
        if not line or line.startswith("#") or line == BIAS_CSV_HEADER:
            continue
        env, *values = line.split(",")
        n, p, m, g = (float(v) for v in values)
        reports.append(BiasReport(env, n, p, m, g))
    return reports


def load_scene_directory(path, stride: int = 1) -> dict[str, list[SceneWindow]]:
    """Parse every .txt file in a directory into that scene's windows."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"scene directory not found: {path}")
    scenes: dict[str, list[SceneWindow]] = {}
    for file in sorted(path.glob("*.txt")):
        name, obs = load_scene_file(file)
        scenes[name] = build_windows(obs, name, stride=stride)
    if not scenes:
        raise FileNotFoundError(f"no .txt scene files in {path}")
    return scenes


def save_window_bundle(path, train_scenes: dict[str, list[SceneWindow]],
                       test_scenes: dict[str, list[SceneWindow]]) -> None:
    """Flat-array .npz bundle holding windows for both stride roles."""
    arrays: dict[str, np.ndarray] = {}
    for role, scenes in (("train", train_scenes), ("test", test_scenes)):
        names = sorted(scenes)
        scene_idx, ped_counts, ped_ids, positions = [], [], [], []
        for si, name in enumerate(names):
            for w in scenes[name]:
                scene_idx.append(si)
                ped_counts.append(w.n_peds)
                ped_ids.append(w.ped_ids)
                positions.append(np.concatenate([w.obs, w.fut], axis=1))
        arrays[f"{role}_scenes"] = np.array(names, dtype=np.str_)
        arrays[f"{role}_scene_idx"] = np.array(scene_idx, dtype=np.int64)
        arrays[f"{role}_ped_counts"] = np.array(ped_counts, dtype=np.int64)
        arrays[f"{role}_ped_ids"] = (np.concatenate(ped_ids)
                                     if ped_ids else np.zeros(0, dtype=np.int64))
        arrays[f"{role}_positions"] = (np.concatenate(positions)
                                       if positions else np.zeros((0, OBS_LEN + PRED_LEN, 2)))
    np.savez(path, **arrays)


def load_window_bundle(path) -> tuple[dict[str, list[SceneWindow]],
                                      dict[str, list[SceneWindow]]]:
    with np.load(path, allow_pickle=False) as data:
        result = []
        for role in ("train", "test"):
            names = [str(n) for n in data[f"{role}_scenes"]]
            scene_idx = data[f"{role}_scene_idx"]
            ped_counts = data[f"{role}_ped_counts"]
            ped_ids = data[f"{role}_ped_ids"]
            positions = data[f"{role}_positions"]
            scenes: dict[str, list[SceneWindow]] = {n: [] for n in names}
            offset = 0
            for si, count in zip(scene_idx, ped_counts):
                block = positions[offset:offset + count]
                scenes[names[si]].append(SceneWindow(
                    scene=names[si],
                    ped_ids=ped_ids[offset:offset + count].copy(),
                    obs=block[:, :OBS_LEN].copy(),
                    fut=block[:, OBS_LEN:].copy(),
                ))
                offset += count
            result.append(scenes)
    return result[0], result[1]


def splits_from_scenes(train_scenes: dict[str, list[SceneWindow]],
                       test_scenes: dict[str, list[SceneWindow]]) -> list[DatasetSplit]:
    """Leave-one-out splits honoring per-role windowing strides."""
    names = list(train_scenes)
    if set(names) != set(test_scenes):
        raise ContractError("train and test scene sets must name the same scenes")
    if len(names) < 2:
        raise ContractError("leave-one-out requires at least 2 scenes")
    splits = []
    for held in names:
        train: list[SceneWindow] = []
        for other in names:
            if other != held:
                train.extend(train_scenes[other])
        splits.append(DatasetSplit(held_out=held, train=train,
                                   test=list(test_scenes[held])))
    return splits
