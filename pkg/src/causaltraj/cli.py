"""Command-line surface: ingest, stats, synth, train, eval, time, report."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import TrainConfig, normalize_config, parse_config
from .data import (
    BiasThresholds,
    DatasetSplit,
    SceneWindow,
    bias_stats,
    load_scene_directory,
    load_window_bundle,
    read_bias_reports_csv,
    save_window_bundle,
    splits_from_scenes,
    write_bias_reports_csv,
)
from .errors import CausaltrajError, ConfigError
from .harness import (
    checkpoint_load,
    checkpoint_save,
    evaluate,
    model_from_checkpoint,
    read_metrics_csv,
    time_inference,
    train,
    write_metrics_csv,
)
from .harness.training import point_prediction
from .causal import InterventionSpec
from .report import bias_bars_svg, consolidate_metrics, trajectory_svg
from .synth import ScenarioConfig, biased_pair, write_scene_set


def _load_scene_groups(path: str, train_stride: int = 1, test_stride: int = 20):
    """(train-role, test-role) scene->windows maps from a directory or bundle."""
    p = Path(path)
    if p.suffix == ".npz":
        return load_window_bundle(p)
    train_scenes = load_scene_directory(p, stride=train_stride)
    test_scenes = load_scene_directory(p, stride=test_stride)
    return train_scenes, test_scenes


def _flat_windows(scenes: dict[str, list[SceneWindow]]) -> list[SceneWindow]:
    out: list[SceneWindow] = []
    for name in sorted(scenes):
        out.extend(scenes[name])
    return out


def _resolve_split(args) -> DatasetSplit:
    if args.train_data or args.test_data:
        train_scenes = (_load_scene_groups(args.train_data)[0]
                        if args.train_data else {})
        test_scenes = (_load_scene_groups(args.test_data)[1]
                       if args.test_data else {})
        name = Path(args.test_data or args.train_data).name
        return DatasetSplit(held_out=name,
                            train=_flat_windows(train_scenes),
                            test=_flat_windows(test_scenes))
    if not args.data:
        raise CausaltrajError("provide --data or --train-data/--test-data")
    train_scenes, test_scenes = _load_scene_groups(args.data)
    splits = splits_from_scenes(train_scenes, test_scenes)
    if args.scene:
        for split in splits:
            if split.held_out == args.scene:
                return split
        raise CausaltrajError(
            f"scene '{args.scene}' not found; have {sorted(train_scenes)}")
    return splits[0]


def _resolve_config(args) -> TrainConfig:
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise CausaltrajError(f"config file not found: {path}")
        config = parse_config(path.read_text(encoding="utf-8"))
    else:
        config = parse_config("")
    updates = {}
    for flag, attr in (("objective", "objective"), ("intervention", "intervention"),
                       ("epochs", "epochs"), ("batch_size", "batch_size")):
        value = getattr(args, flag, None)
        if value is not None:
            updates[attr] = value
    if getattr(args, "causal", None) is not None:
        updates["causal"] = args.causal
    if getattr(args, "scene", None):
        updates["scene"] = args.scene
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    elif os.environ.get("CTP_SEED"):
        updates["seed"] = int(os.environ["CTP_SEED"])
    if getattr(args, "family", None):
        family = args.family
        base = parse_config(f"[model]\nfamily = {family}\n").model
        config = TrainConfig(model=base, **{
            f.name: getattr(config, f.name)
            for f in config.__dataclass_fields__.values() if f.name != "model"})
    if updates:
        import dataclasses
        config = dataclasses.replace(config, **updates)
    return config


def _cmd_ingest(args) -> int:
    train_scenes = load_scene_directory(args.data, stride=args.train_stride)
    test_scenes = load_scene_directory(args.data, stride=args.test_stride)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_window_bundle(out, train_scenes, test_scenes)
    n_train = sum(len(v) for v in train_scenes.values())
    n_test = sum(len(v) for v in test_scenes.values())
    print(f"ingested {len(train_scenes)} scenes: {n_train} train-stride windows, "
          f"{n_test} test-stride windows -> {out}")
    return 0


def _cmd_stats(args) -> int:
    thresholds = BiasThresholds(
        neighbor_radius=args.neighbor_radius,
        parallel_heading_deg=args.parallel_heading,
        parallel_distance=args.parallel_distance,
        meet_far=args.meet_far, meet_near=args.meet_near,
        gather_final=args.gather_final)
    reports = []
    for path in args.data:
        scenes, _ = _load_scene_groups(path, train_stride=args.stride,
                                       test_stride=args.stride)
        windows = _flat_windows(scenes)
        env = args.environment or Path(path).name
        reports.append(bias_stats(windows, env, thresholds))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_bias_reports_csv(reports), encoding="utf-8")
    print(f"wrote {len(reports)} environment report(s) -> {out}")
    return 0


def _cmd_synth(args) -> int:
    config = ScenarioConfig(
        n_scenes=args.scenes, peds_range=(args.peds_min, args.peds_max),
        bias_p=args.p_train, speed_range=(args.speed_min, args.speed_max),
        noise_scale=args.noise, seed=args.seed if args.seed is not None
        else int(os.environ.get("CTP_SEED", "0")),
        parallel_rate=args.parallel_rate, gather_rate=args.gather_rate)
    train_set, test_set = biased_pair(config, args.p_train, args.p_test)
    out = Path(args.out)
    write_scene_set(train_set, out / "train")
    write_scene_set(test_set, out / "test")
    print(f"wrote {len(train_set.windows)} train and {len(test_set.windows)} "
          f"test scenes -> {out}")
    return 0


def _cmd_train(args) -> int:
    config = _resolve_config(args)
    split = _resolve_split(args)
    result = train(config, split)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint_save(out / "final.ckpt", result.final)
    checkpoint_save(out / "best.ckpt", result.best)
    (out / "train.log").write_text(
        "".join(entry.line() + "\n" for entry in result.log), encoding="utf-8")
    (out / "config.txt").write_text(normalize_config(config), encoding="utf-8")
    last = result.log[-1]
    print(f"trained {config.model.family} ({'causal' if config.causal else 'baseline'}) "
          f"for {config.epochs} epochs; final loss {last.train_loss:.6f}, "
          f"val ADE {last.val_ade:.6f} -> {out}")
    return 0


def _cmd_eval(args) -> int:
    checkpoint = checkpoint_load(args.checkpoint)
    split = _resolve_split(args)
    seeds = tuple(int(s) for s in args.seeds.split(","))
    records, aggregates = evaluate(checkpoint, split, args.k, seeds=seeds,
                                   on=args.on)
    if args.time and records:
        model, config = model_from_checkpoint(checkpoint)
        windows = split.test if args.on == "test" else split.train
        spec = InterventionSpec(mode=config.intervention, phase="eval",
                                half_width=config.half_width,
                                mean_decay=config.mean_decay,
                                running_mean=checkpoint.running_mean)
        sec, _ = time_inference(model, windows, repetitions=3, spec=spec,
                                causal=config.causal)
        for r in records + aggregates:
            r.sec_per_window = sec
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_metrics_csv(records + aggregates), encoding="utf-8")
    if aggregates:
        mean_ade = float(np.mean([r.ade for r in aggregates]))
        mean_fde = float(np.mean([r.fde for r in aggregates]))
        print(f"evaluated {len(records)} window records at k={args.k}: "
              f"ADE {mean_ade:.4f} / FDE {mean_fde:.4f} -> {out}")
    else:
        print(f"no windows evaluated -> {out}")
    return 0


def _cmd_time(args) -> int:
    checkpoint = checkpoint_load(args.checkpoint)
    split = _resolve_split(args)
    model, config = model_from_checkpoint(checkpoint)
    windows = split.test or split.train
    spec = InterventionSpec(mode=config.intervention, phase="eval",
                            half_width=config.half_width,
                            mean_decay=config.mean_decay,
                            running_mean=checkpoint.running_mean)
    dual, _ = time_inference(model, windows, repetitions=args.reps, spec=spec,
                             causal=True)
    single, _ = time_inference(model, windows, repetitions=args.reps, spec=spec,
                               causal=False)
    lines = ["mode,reps,sec_per_window",
             f"causal_dual_pass,{args.reps},{dual:.9f}",
             f"single_pass,{args.reps},{single:.9f}"]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"dual-pass {dual * 1e3:.3f} ms/window, single-pass "
          f"{single * 1e3:.3f} ms/window over {args.reps} repetitions -> {out}")
    return 0


def _cmd_report(args) -> int:
    wrote = []
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.metrics:
        records = []
        for path in args.metrics:
            records.extend(read_metrics_csv(Path(path).read_text(encoding="utf-8")))
        (out / "results.csv").write_text(consolidate_metrics(records),
                                         encoding="utf-8")
        wrote.append("results.csv")
    if args.stats_train and args.stats_test:
        train_reports = read_bias_reports_csv(
            Path(args.stats_train).read_text(encoding="utf-8"))
        test_reports = read_bias_reports_csv(
            Path(args.stats_test).read_text(encoding="utf-8"))
        if not train_reports or not test_reports:
            raise CausaltrajError("stats CSVs carry no environment rows")
        (out / "bias.svg").write_text(
            bias_bars_svg(train_reports[0], test_reports[0]), encoding="utf-8")
        wrote.append("bias.svg")
    if args.checkpoint:
        checkpoint = checkpoint_load(args.checkpoint)
        split = _resolve_split(args)
        model, config = model_from_checkpoint(checkpoint)
        windows = (split.test or split.train)[:args.count]
        if not windows:
            raise CausaltrajError("no windows available to plot")
        spec = InterventionSpec(mode=config.intervention, phase="eval",
                                half_width=config.half_width,
                                mean_decay=config.mean_decay,
                                running_mean=checkpoint.running_mean)
        preds = [point_prediction(model, w, spec, config.causal) for w in windows]
        (out / "trajectories.svg").write_text(trajectory_svg(windows, preds),
                                              encoding="utf-8")
        wrote.append("trajectories.svg")
    if not wrote:
        raise CausaltrajError(
            "nothing to report: pass --metrics, --stats-train/--stats-test, "
            "or --checkpoint")
    print(f"wrote {', '.join(wrote)} -> {out}")
    return 0


def _add_data_flags(p: argparse.ArgumentParser, include_scene: bool = True) -> None:
    p.add_argument("--data", help="scene directory or ingested .npz bundle")
    p.add_argument("--train-data", help="directory of training scenes")
    p.add_argument("--test-data", help="directory of testing scenes")
    if include_scene:
        p.add_argument("--scene", default="", help="held-out scene (leave-one-out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causaltraj",
        description="Counterfactual-analysis trajectory prediction toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate trajectory files into a window bundle")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train-stride", type=int, default=1)
    p.add_argument("--test-stride", type=int, default=20)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("stats", help="environment interaction statistics CSV")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--environment", default="")
    p.add_argument("--stride", type=int, default=20)
    p.add_argument("--out", required=True)
    p.add_argument("--neighbor-radius", type=float, default=3.0)
    p.add_argument("--parallel-heading", type=float, default=15.0)
    p.add_argument("--parallel-distance", type=float, default=2.0)
    p.add_argument("--meet-far", type=float, default=4.0)
    p.add_argument("--meet-near", type=float, default=1.0)
    p.add_argument("--gather-final", type=float, default=2.0)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("synth", help="generate a biased train/test scene pair")
    p.add_argument("--out", required=True)
    p.add_argument("--scenes", type=int, default=200)
    p.add_argument("--p-train", type=float, default=0.9)
    p.add_argument("--p-test", type=float, default=0.1)
    p.add_argument("--peds-min", type=int, default=1)
    p.add_argument("--peds-max", type=int, default=3)
    p.add_argument("--speed-min", type=float, default=0.3)
    p.add_argument("--speed-max", type=float, default=0.6)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--parallel-rate", type=float, default=0.0)
    p.add_argument("--gather-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a predictor on a split")
    p.add_argument("--config", help="sectioned key = value config file")
    _add_data_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--family", choices=("stgat", "stgcnn"))
    p.add_argument("--objective", choices=("causal_l2", "variety_k",
                                           "causal_nll", "causal_gan"))
    p.add_argument("--intervention", choices=("zero", "mean", "random"))
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    causal_group = p.add_mutually_exclusive_group()
    causal_group.add_argument("--causal", dest="causal", action="store_true",
                              default=None)
    causal_group.add_argument("--no-causal", dest="causal", action="store_false")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="best-of-K evaluation to a metrics CSV")
    p.add_argument("--checkpoint", required=True)
    _add_data_flags(p)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--seeds", default="0", help="comma-separated seeds")
    p.add_argument("--on", choices=("test", "train"), default="test")
    p.add_argument("--time", action="store_true",
                   help="also measure wall-clock seconds per window")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("time", help="inference timing at batch size 1")
    p.add_argument("--checkpoint", required=True)
    _add_data_flags(p)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_time)

    p = sub.add_parser("report", help="SVG plots and consolidated results")
    p.add_argument("--metrics", nargs="*", default=[])
    p.add_argument("--stats-train")
    p.add_argument("--stats-test")
    p.add_argument("--checkpoint")
    _add_data_flags(p)
    p.add_argument("--count", type=int, default=4,
                   help="windows to draw in the trajectory plot")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1
    except (CausaltrajError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
