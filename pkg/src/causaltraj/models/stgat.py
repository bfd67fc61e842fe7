"""Recurrent predictor: motion LSTM + graph-attention interaction encoder
+ recurrent decoder emitting 12 displacement steps."""

from __future__ import annotations

import numpy as np

from ..data import PRED_LEN, SceneWindow, to_relative
from ..errors import ContractError
from ..grad import (
    Array,
    ParameterStore,
    add,
    concat,
    constant,
    matmul,
    stack,
    tanh,
    uniform_init,
)
from .config import INPUT_DIM, ModelConfig
from .layers import attention_mask, gat_layer, lstm_cell


def init_stgat_params(config: ModelConfig, rng: np.random.Generator) -> ParameterStore:
    config.validate()
    e = config.embed_dim
    hm, hg, hd = config.motion_hidden, config.graph_hidden, config.decoder_hidden
    f_head = config.attention_out // config.attention_heads
    feat = hm + config.attention_out + config.noise_dim
    store = ParameterStore()
    store.add("embed.w", uniform_init(rng, (INPUT_DIM, e), INPUT_DIM))
    store.add("embed.b", np.zeros(e))
    store.add("mlstm.wx", uniform_init(rng, (e, 4 * hm), e))
    store.add("mlstm.wh", uniform_init(rng, (hm, 4 * hm), hm))
    store.add("mlstm.b", np.zeros(4 * hm))
    store.add("glstm.wx", uniform_init(rng, (e, 4 * hg), e))
    store.add("glstm.wh", uniform_init(rng, (hg, 4 * hg), hg))
    store.add("glstm.b", np.zeros(4 * hg))
    for i in range(config.attention_heads):
        store.add(f"gat.h{i}.w", uniform_init(rng, (hg, f_head), hg))
        store.add(f"gat.h{i}.a_src", uniform_init(rng, (f_head, 1), f_head))
        store.add(f"gat.h{i}.a_dst", uniform_init(rng, (f_head, 1), f_head))
    store.add("init.w", uniform_init(rng, (feat, hd), feat))
    store.add("init.b", np.zeros(hd))
    store.add("dec_embed.w", uniform_init(rng, (INPUT_DIM, e), INPUT_DIM))
    store.add("dec_embed.b", np.zeros(e))
    store.add("dec.wx", uniform_init(rng, (e, 4 * hd), e))
    store.add("dec.wh", uniform_init(rng, (hd, 4 * hd), hd))
    store.add("dec.b", np.zeros(4 * hd))
    store.add("out.w", uniform_init(rng, (hd, INPUT_DIM), hd))
    store.add("out.b", np.zeros(INPUT_DIM))
    return store


class STGATModel:
    family = "stgat"

    def __init__(self, config: ModelConfig, store: ParameterStore):
        if config.family != "stgat":
            raise ContractError(f"config family '{config.family}' is not stgat")
        self.config = config
        self.store = store

    @classmethod
    def init(cls, config: ModelConfig, rng: np.random.Generator) -> "STGATModel":
        return cls(config, init_stgat_params(config, rng))

    def motion_feature_shape(self, n_peds: int) -> tuple[int, int]:
        return (n_peds, self.config.motion_hidden)

    def _run_lstm(self, steps: list[Array], prefix: str, hidden: int, n: int) -> Array:
        s = self.store
        h = constant(np.zeros((n, hidden)))
        c = constant(np.zeros((n, hidden)))
        for x in steps:
            h, c = lstm_cell(x, h, c, s[f"{prefix}.wx"], s[f"{prefix}.wh"],
                             s[f"{prefix}.b"])
        return h

    def encode(self, window: SceneWindow,
               blocks: list[int] | None = None) -> tuple[Array, Array]:
        """Motion feature (N, Hm) and interaction feature (N, attention_out).

        `blocks` confines attention to groups of rows when the window is a
        merged batch of independent windows.
        """
        s = self.store
        disp = to_relative(window.obs)  # (N, 7, 2)
        n = window.n_peds
        embedded = [add(matmul(constant(disp[:, t]), s["embed.w"]), s["embed.b"])
                    for t in range(disp.shape[1])]
        motion = self._run_lstm(embedded, "mlstm", self.config.motion_hidden, n)
        graph_h = self._run_lstm(embedded, "glstm", self.config.graph_hidden, n)
        heads = [(s[f"gat.h{i}.w"], s[f"gat.h{i}.a_src"], s[f"gat.h{i}.a_dst"])
                 for i in range(self.config.attention_heads)]
        mask = attention_mask(blocks) if blocks is not None else None
        interaction = gat_layer(graph_h, heads, mask=mask)
        return motion, interaction

    def decode(self, motion: Array, interaction: Array, z: np.ndarray | None,
               window: SceneWindow) -> Array:
        """12 displacement steps (N, 12, 2) from the connected feature."""
        s = self.store
        n = window.n_peds
        parts = [motion, interaction]
        if self.config.noise_dim > 0:
            if z is None:
                z = np.zeros(self.config.noise_dim)
            z = np.asarray(z, dtype=np.float64)
            if z.ndim == 1:
                if z.shape != (self.config.noise_dim,):
                    raise ContractError(
                        f"noise sample has shape {z.shape}, expected "
                        f"({self.config.noise_dim},)")
                rows = np.tile(z, (n, 1))
            elif z.shape == (n, self.config.noise_dim):
                rows = z
            else:
                raise ContractError(
                    f"noise rows have shape {z.shape}, expected "
                    f"({n}, {self.config.noise_dim})")
            parts.append(constant(rows))
        connected = concat(parts, axis=1)
        h = tanh(add(matmul(connected, s["init.w"]), s["init.b"]))
        c = constant(np.zeros((n, self.config.decoder_hidden)))
        prev = constant(window.obs[:, -1] - window.obs[:, -2])  # last observed step
        outputs = []
        for _ in range(PRED_LEN):
            x = add(matmul(prev, s["dec_embed.w"]), s["dec_embed.b"])
            h, c = lstm_cell(x, h, c, s["dec.wx"], s["dec.wh"], s["dec.b"])
            step = add(matmul(h, s["out.w"]), s["out.b"])
            outputs.append(step)
            prev = step
        return stack(outputs, axis=1)

    def forward(self, window: SceneWindow, z: np.ndarray | None = None,
                motion_override: Array | np.ndarray | None = None,
                blocks: list[int] | None = None) -> Array:
        """Full pass; `motion_override` replaces exactly the motion-encoder output."""
        motion, interaction = self.encode(window, blocks=blocks)
        if motion_override is not None:
            override = motion_override if isinstance(motion_override, Array) \
                else constant(motion_override)
            if override.shape != motion.shape:
                raise ContractError(
                    f"motion override shape {override.shape} does not match "
                    f"feature shape {motion.shape}")
            motion = override
        return self.decode(motion, interaction, z, window)
