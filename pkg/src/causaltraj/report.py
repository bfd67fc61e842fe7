"""Static SVG plots and consolidated results tables from evaluation outputs."""

from __future__ import annotations

import numpy as np

from .data import BiasReport, SceneWindow
from .errors import ContractError
from .harness.metrics import MetricsRecord

_COLORS = {"obs": "#555555", "gt": "#2a9d2a", "pred": "#d62728"}


def _polyline(points: np.ndarray, color: str, dashed: bool = False,
              width: float = 2.0) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return (f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{dash}/>')


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>']
                     + body + ["</svg>"]) + "\n"


def trajectory_svg(windows: list[SceneWindow], predictions: list[np.ndarray],
                   size: int = 640) -> str:
    """Observed (grey), ground-truth future (green), and predicted (red,
    dashed) polylines for each pedestrian of each window."""
    if len(windows) != len(predictions):
        raise ContractError("one prediction per window required")
    if not windows:
        raise ContractError("nothing to plot")
    all_points = []
    for w, pred in zip(windows, predictions):
        all_points.append(np.concatenate([w.obs, w.fut], axis=1).reshape(-1, 2))
        all_points.append(np.asarray(pred).reshape(-1, 2))
    pts = np.concatenate(all_points)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-6)
    margin = 30.0
    scale = (size - 2 * margin) / span.max()

    def to_px(p: np.ndarray) -> np.ndarray:
        q = (p - lo) * scale + margin
        q[:, 1] = size - q[:, 1]  # SVG y grows downward
        return q

    body = []
    for w, pred in zip(windows, predictions):
        pred = np.asarray(pred)
        for i in range(w.n_peds):
            obs = w.obs[i]
            body.append(_polyline(to_px(obs), _COLORS["obs"]))
            gt = np.concatenate([obs[-1:], w.fut[i]])
            body.append(_polyline(to_px(gt), _COLORS["gt"]))
            pr = np.concatenate([obs[-1:], pred[i]])
            body.append(_polyline(to_px(pr), _COLORS["pred"], dashed=True))
    legend = [
        f'<text x="{margin}" y="20" font-size="13" fill="{_COLORS["obs"]}">observed</text>',
        f'<text x="{margin + 90}" y="20" font-size="13" fill="{_COLORS["gt"]}">ground truth</text>',
        f'<text x="{margin + 210}" y="20" font-size="13" fill="{_COLORS["pred"]}">predicted</text>',
    ]
    return _svg(size, size, legend + body)


def bias_bars_svg(train_report: BiasReport, test_report: BiasReport,
                  width: int = 640, height: int = 400) -> str:
    """Grouped bars comparing the four interaction statistics across the
    training and testing environments."""
    stats = [
        ("neighbors", train_report.neighbors_avg, test_report.neighbors_avg),
        ("parallel", train_report.parallel_avg, test_report.parallel_avg),
        ("meet", train_report.meet_avg, test_report.meet_avg),
        ("gather", train_report.gather_avg, test_report.gather_avg),
    ]
    top = max(max(a, b) for _, a, b in stats) or 1.0
    margin, base = 40.0, height - 60.0
    group_w = (width - 2 * margin) / len(stats)
    bar_w = group_w * 0.3
    body = [
        f'<text x="{margin}" y="24" font-size="14" fill="#1f77b4">'
        f'train: {train_report.environment}</text>',
        f'<text x="{margin + 220}" y="24" font-size="14" fill="#ff7f0e">'
        f'test: {test_report.environment}</text>',
        f'<line x1="{margin}" y1="{base}" x2="{width - margin}" y2="{base}" '
        f'stroke="black"/>',
    ]
    for i, (name, train_v, test_v) in enumerate(stats):
        cx = margin + group_w * (i + 0.5)
        for j, (value, color) in enumerate([(train_v, "#1f77b4"), (test_v, "#ff7f0e")]):
            h = (base - 50.0) * value / top
            x = cx - bar_w + j * bar_w
            body.append(f'<rect x="{x:.2f}" y="{base - h:.2f}" width="{bar_w:.2f}" '
                        f'height="{h:.2f}" fill="{color}"/>')
            body.append(f'<text x="{x:.2f}" y="{base - h - 6:.2f}" font-size="11">'
                        f'{value:.2f}</text>')
        body.append(f'<text x="{cx - bar_w:.2f}" y="{base + 18:.2f}" '
                    f'font-size="12">{name}</text>')
    return _svg(width, height, body)


RESULTS_CSV_HEADER = "scene,split,k,ade_mean,fde_mean,records,seeds"


def consolidate_metrics(records: list[MetricsRecord]) -> str:
    """Mean ADE/FDE per (scene, split, k) group, across seeds and windows."""
    groups: dict[tuple[str, str, int], list[MetricsRecord]] = {}
    for r in records:
        groups.setdefault((r.scene, r.split, r.k), []).append(r)
    lines = [RESULTS_CSV_HEADER]
    for (scene, split, k) in sorted(groups):
        rs = groups[(scene, split, k)]
        seeds = sorted({r.seed for r in rs})
        lines.append(
            f"{scene},{split},{k},"
            f"{np.mean([r.ade for r in rs]):.9f},"
            f"{np.mean([r.fde for r in rs]):.9f},"
            f"{len(rs)},{';'.join(str(s) for s in seeds)}")
    return "\n".join(lines) + "\n"
