"""Training configuration: dataclass, sectioned key=value parsing with
line-numbered error accumulation, and a canonical normalized echo."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .models import ModelConfig

OBJECTIVES = ("causal_l2", "variety_k", "causal_nll", "causal_gan")


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    intervention: str = "zero"          # zero | mean | random
    half_width: float = 0.1
    mean_decay: float = 0.99
    causal: bool = True
    objective: str = "causal_l2"
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    clip_norm: float = 10.0
    seed: int = 0
    scene: str = ""                     # held-out scene selection; "" = first split
    variety_k: int = 5

    def validate(self) -> None:
        problems = _cross_field_problems(self)
        if problems:
            raise ConfigError(problems)
        self.model.validate()

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)


# (section, key) -> (type, attribute path)
_SCHEMA: dict[tuple[str, str], tuple[type, str]] = {
    ("model", "family"): (str, "model.family"),
    ("model", "output_mode"): (str, "model.output_mode"),
    ("model", "embed_dim"): (int, "model.embed_dim"),
    ("model", "motion_hidden"): (int, "model.motion_hidden"),
    ("model", "graph_hidden"): (int, "model.graph_hidden"),
    ("model", "attention_heads"): (int, "model.attention_heads"),
    ("model", "attention_out"): (int, "model.attention_out"),
    ("model", "decoder_hidden"): (int, "model.decoder_hidden"),
    ("model", "noise_dim"): (int, "model.noise_dim"),
    ("model", "gcn_hidden"): (int, "model.gcn_hidden"),
    ("model", "temporal_kernel"): (int, "model.temporal_kernel"),
    ("intervention", "mode"): (str, "intervention"),
    ("intervention", "half_width"): (float, "half_width"),
    ("intervention", "mean_decay"): (float, "mean_decay"),
    ("train", "causal"): (bool, "causal"),
    ("train", "objective"): (str, "objective"),
    ("train", "epochs"): (int, "epochs"),
    ("train", "batch_size"): (int, "batch_size"),
    ("train", "learning_rate"): (float, "learning_rate"),
    ("train", "clip_norm"): (float, "clip_norm"),
    ("train", "seed"): (int, "seed"),
    ("train", "scene"): (str, "scene"),
    ("train", "variety_k"): (int, "variety_k"),
}

# attribute -> (predicate, description) range gates
_RANGES = {
    "model.family": (lambda v: v in ("stgat", "stgcnn"), "must be stgat or stgcnn"),
    "model.output_mode": (lambda v: v in ("", "point", "gaussian"),
                          "must be point or gaussian"),
    "model.embed_dim": (lambda v: v >= 1, "must be >= 1"),
    "model.motion_hidden": (lambda v: v >= 1, "must be >= 1"),
    "model.graph_hidden": (lambda v: v >= 1, "must be >= 1"),
    "model.attention_heads": (lambda v: v >= 1, "must be >= 1"),
    "model.attention_out": (lambda v: v >= 1, "must be >= 1"),
    "model.decoder_hidden": (lambda v: v >= 1, "must be >= 1"),
    "model.noise_dim": (lambda v: v >= 0, "must be >= 0"),
    "model.gcn_hidden": (lambda v: v >= 1, "must be >= 1"),
    "model.temporal_kernel": (lambda v: v >= 1 and v % 2 == 1, "must be odd and >= 1"),
    "intervention": (lambda v: v in ("zero", "mean", "random"),
                     "must be zero, mean, or random"),
    "half_width": (lambda v: v > 0, "must be > 0"),
    "mean_decay": (lambda v: 0 < v < 1, "must lie in (0, 1)"),
    "objective": (lambda v: v in OBJECTIVES,
                  "must be one of " + ", ".join(OBJECTIVES)),
    "epochs": (lambda v: v >= 1, "must be >= 1"),
    "batch_size": (lambda v: v >= 1, "must be >= 1"),
    "learning_rate": (lambda v: v > 0, "must be > 0"),
    "clip_norm": (lambda v: v >= 0, "must be >= 0"),
    "variety_k": (lambda v: v >= 1, "must be >= 1"),
}


def _parse_value(text: str, want: type):
    if want is str:
        if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
            return text[1:-1]
        return text
    if want is bool:
        if text in ("true", "false"):
            return text == "true"
        raise ValueError("expected true or false")
    if want is int:
        try:
            return int(text)
        except ValueError:
            raise ValueError("expected an integer") from None
    try:
        return float(text)
    except ValueError:
        raise ValueError("expected a number") from None


def _cross_field_problems(config: TrainConfig) -> list[str]:
    problems = []
    if config.model.attention_out % config.model.attention_heads != 0:
        problems.append(
            f"attention_out {config.model.attention_out} is not divisible by "
            f"attention_heads {config.model.attention_heads}")
    if config.model.family == "stgat" and config.model.output_mode == "gaussian":
        problems.append("the stgat family emits point predictions only")
    if config.objective == "causal_nll" and config.model.family != "stgcnn":
        problems.append("causal_nll requires the stgcnn family's Gaussian head")
    return problems


def parse_config(text: str) -> TrainConfig:
    """Parse sectioned `key = value` text; every problem is accumulated and
    raised together as a ConfigError with line numbers."""
    values: dict[str, object] = {}
    lines_seen: dict[str, int] = {}
    problems: list[str] = []
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if "#" in line and '"' not in line:
            line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("model", "intervention", "train"):
                problems.append(f"line {lineno}: unknown section [{section}]")
                section = "?"
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected `key = value`")
            continue
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if section == "?":
            continue
        schema = _SCHEMA.get((section, key))
        if schema is None:
            problems.append(f"line {lineno}: unknown key '{key}' in section [{section}]")
            continue
        want, attr = schema
        try:
            value = _parse_value(value_text, want)
        except ValueError as exc:
            problems.append(f"line {lineno}: {key}: {exc}")
            continue
        gate = _RANGES.get(attr)
        if gate is not None and not gate[0](value):
            problems.append(f"line {lineno}: {key} {gate[1]} (got {value})")
            continue
        values[attr] = value
        lines_seen[attr] = lineno

    model_kwargs = {}
    train_kwargs = {}
    for attr, value in values.items():
        if attr.startswith("model."):
            model_kwargs[attr.split(".", 1)[1]] = value
        else:
            train_kwargs[attr] = value
    family = model_kwargs.get("family", ModelConfig.family)
    if model_kwargs.get("output_mode", "") == "":
        model_kwargs["output_mode"] = "gaussian" if family == "stgcnn" else "point"
    if family == "stgcnn" and "noise_dim" not in model_kwargs:
        model_kwargs["noise_dim"] = 0
    config = TrainConfig(model=ModelConfig(**model_kwargs), **train_kwargs)
    for problem in _cross_field_problems(config):
        problems.append(f"line {lines_seen.get('model.attention_out', 0)}: {problem}"
                        if "divisible" in problem else f"config: {problem}")
    if problems:
        raise ConfigError(problems)
    return config


def normalize_config(config: TrainConfig) -> str:
    """Canonical echo with every value, defaulted or not, made explicit.

    Re-parsing the echo reproduces the config exactly.
    """
    m = config.model

    def fmt(value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        if isinstance(value, str):
            return value if value.isidentifier() else f'"{value}"'
        return str(value)

    lines = [
        "[model]",
        f"family = {fmt(m.family)}",
        f"output_mode = {fmt(m.output_mode)}",
        f"embed_dim = {fmt(m.embed_dim)}",
        f"motion_hidden = {fmt(m.motion_hidden)}",
        f"graph_hidden = {fmt(m.graph_hidden)}",
        f"attention_heads = {fmt(m.attention_heads)}",
        f"attention_out = {fmt(m.attention_out)}",
        f"decoder_hidden = {fmt(m.decoder_hidden)}",
        f"noise_dim = {fmt(m.noise_dim)}",
        f"gcn_hidden = {fmt(m.gcn_hidden)}",
        f"temporal_kernel = {fmt(m.temporal_kernel)}",
        "",
        "[intervention]",
        f"mode = {fmt(config.intervention)}",
        f"half_width = {fmt(config.half_width)}",
        f"mean_decay = {fmt(config.mean_decay)}",
        "",
        "[train]",
        f"causal = {fmt(config.causal)}",
        f"objective = {fmt(config.objective)}",
        f"epochs = {fmt(config.epochs)}",
        f"batch_size = {fmt(config.batch_size)}",
        f"learning_rate = {fmt(config.learning_rate)}",
        f"clip_norm = {fmt(config.clip_norm)}",
        f"seed = {fmt(config.seed)}",
        f"scene = {fmt(config.scene)}",
        f"variety_k = {fmt(config.variety_k)}",
    ]
    return "\n".join(lines) + "\n"
