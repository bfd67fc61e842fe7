"""Model configuration and the analytic parameter count."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..data import OBS_LEN, PRED_LEN
from ..errors import ContractError

FAMILIES = ("stgat", "stgcnn")
OUTPUT_MODES = ("point", "gaussian")

# Displacement inputs: 8 observed positions yield 7 per-frame steps.
INPUT_STEPS = OBS_LEN - 1
INPUT_DIM = 2
GAUSSIAN_DIM = 5  # mu_x, mu_y, sigma_x, sigma_y, rho


@dataclass(frozen=True)
class ModelConfig:
    family: str = "stgat"
    output_mode: str = "point"
    # recurrent family
    embed_dim: int = 16
    motion_hidden: int = 48
    graph_hidden: int = 48
    attention_heads: int = 4
    attention_out: int = 48
    decoder_hidden: int = 64
    noise_dim: int = 8
    # graph-convolution family
    gcn_hidden: int = 32
    temporal_kernel: int = 3

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ContractError(f"unknown family '{self.family}'")
        if self.output_mode not in OUTPUT_MODES:
            raise ContractError(f"unknown output mode '{self.output_mode}'")
        sizes = (self.embed_dim, self.motion_hidden, self.graph_hidden,
                 self.attention_heads, self.attention_out, self.decoder_hidden,
                 self.gcn_hidden, self.temporal_kernel)
        if any(s < 1 for s in sizes):
            raise ContractError("all model sizes must be >= 1")
        if self.noise_dim < 0:
            raise ContractError("noise dimension must be >= 0")
        if self.attention_out % self.attention_heads != 0:
            raise ContractError(
                f"attention output {self.attention_out} not divisible by "
                f"{self.attention_heads} heads")
        if self.temporal_kernel % 2 == 0:
            raise ContractError("temporal kernel must be odd to preserve length")
        if self.family == "stgat" and self.output_mode != "point":
            raise ContractError("the recurrent family emits point predictions")

    @staticmethod
    def stgat_default() -> "ModelConfig":
        return ModelConfig(family="stgat", output_mode="point")

    @staticmethod
    def stgcnn_default() -> "ModelConfig":
        return ModelConfig(family="stgcnn", output_mode="gaussian", noise_dim=0)

    def with_output_mode(self, mode: str) -> "ModelConfig":
        return replace(self, output_mode=mode)


def count_parameters(config: ModelConfig) -> int:
    """Total trainable scalar count, in closed form from the config."""
    config.validate()
    e = config.embed_dim
    if config.family == "stgat":
        hm, hg = config.motion_hidden, config.graph_hidden
        heads = config.attention_heads
        f_head = config.attention_out // heads
        hd = config.decoder_hidden
        total = INPUT_DIM * e + e                               # observation embedding
        total += 4 * hm * (e + hm) + 4 * hm                     # motion LSTM
        total += 4 * hg * (e + hg) + 4 * hg                     # graph LSTM
        total += heads * (hg * f_head + 2 * f_head)             # attention heads
        feat = hm + config.attention_out + config.noise_dim
        total += feat * hd + hd                                 # decoder init
        total += INPUT_DIM * e + e                              # decoder input embedding
        total += 4 * hd * (e + hd) + 4 * hd                     # decoder LSTM
        total += hd * INPUT_DIM + INPUT_DIM                     # output head
        return total
    h = config.gcn_hidden
    k = config.temporal_kernel
    out_dim = GAUSSIAN_DIM if config.output_mode == "gaussian" else INPUT_DIM
    total = INPUT_DIM * h + h                                   # node embedding
    total += h * h + h                                          # spatial graph conv
    total += h * h * k + h                                      # temporal conv (observed)
    total += INPUT_STEPS * PRED_LEN + PRED_LEN                  # time extrapolator
    total += h * h * k + h                                      # temporal conv (predicted)
    total += h * out_dim + out_dim                              # output head
    return total
