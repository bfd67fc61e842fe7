"""Graph-convolution predictor: per-frame spatial graph convolution
interleaved with temporal convolutions, a time extrapolator mapping the
observed steps to the 12 predicted ones, and a bivariate-Gaussian head."""

from __future__ import annotations

import numpy as np

from ..data import PRED_LEN, SceneWindow, to_relative
from ..errors import ContractError
from ..grad import (
    Array,
    ParameterStore,
    add,
    constant,
    exp,
    matmul,
    relu,
    reshape,
    slice_axis,
    stack,
    tanh,
    temporal_conv,
    transpose,
    uniform_init,
)
from .config import GAUSSIAN_DIM, INPUT_DIM, INPUT_STEPS, ModelConfig
from .layers import adjacency_from_positions
from .output import GaussianParams


def init_stgcnn_params(config: ModelConfig, rng: np.random.Generator) -> ParameterStore:
    config.validate()
    h = config.gcn_hidden
    k = config.temporal_kernel
    out_dim = GAUSSIAN_DIM if config.output_mode == "gaussian" else INPUT_DIM
    store = ParameterStore()
    store.add("embed.w", uniform_init(rng, (INPUT_DIM, h), INPUT_DIM))
    store.add("embed.b", np.zeros(h))
    store.add("gcn.w", uniform_init(rng, (h, h), h))
    store.add("gcn.b", np.zeros((h, 1)))
    store.add("tconv_obs.k", uniform_init(rng, (h, h, k), h * k))
    store.add("tconv_obs.b", np.zeros((h, 1)))
    store.add("extrap.w", uniform_init(rng, (INPUT_STEPS, PRED_LEN), INPUT_STEPS))
    store.add("extrap.b", np.zeros(PRED_LEN))
    store.add("tconv_pred.k", uniform_init(rng, (h, h, k), h * k))
    store.add("tconv_pred.b", np.zeros((h, 1)))
    store.add("head.w", uniform_init(rng, (h, out_dim), h))
    store.add("head.b", np.zeros(out_dim))
    return store


class STGCNNModel:
    family = "stgcnn"

    def __init__(self, config: ModelConfig, store: ParameterStore):
        if config.family != "stgcnn":
            raise ContractError(f"config family '{config.family}' is not stgcnn")
        self.config = config
        self.store = store

    @classmethod
    def init(cls, config: ModelConfig, rng: np.random.Generator) -> "STGCNNModel":
        return cls(config, init_stgcnn_params(config, rng))

    def node_features(self, window: SceneWindow) -> np.ndarray:
        """Factual node inputs: per-frame displacements as (N, 2, T)."""
        return np.transpose(to_relative(window.obs), (0, 2, 1))

    def node_feature_shape(self, n_peds: int) -> tuple[int, int, int]:
        return (n_peds, INPUT_DIM, INPUT_STEPS)

    def adjacency(self, window: SceneWindow,
                  blocks: list[int] | None = None) -> np.ndarray:
        """Per-step normalized adjacency (T, N, N) from factual positions.

        Step t uses the positions at the end of displacement step t. With
        `blocks`, the result is block-diagonal: each group of rows is
        normalized independently, so a merged batch of windows reproduces
        the per-window adjacencies exactly.
        """
        n = window.n_peds
        if blocks is None:
            return np.stack([adjacency_from_positions(window.obs[:, t + 1])
                             for t in range(INPUT_STEPS)])
        out = np.zeros((INPUT_STEPS, n, n))
        for t in range(INPUT_STEPS):
            start = 0
            for size in blocks:
                stop = start + size
                out[t, start:stop, start:stop] = adjacency_from_positions(
                    window.obs[start:stop, t + 1])
                start = stop
        return out

    def _per_frame_linear(self, x: Array, w: Array, b: Array) -> Array:
        # (N, C, T) -> (N, C', T) applying the same linear map at every step
        n, _, t = x.shape
        flat = reshape(transpose(x, (0, 2, 1)), (n * t, x.shape[1]))
        y = add(matmul(flat, w), b)
        return transpose(reshape(y, (n, t, w.shape[1])), (0, 2, 1))

    def forward(self, window: SceneWindow,
                node_override: Array | np.ndarray | None = None,
                adjacency: np.ndarray | None = None,
                blocks: list[int] | None = None):
        """Full pass; `node_override` replaces the node input features only.

        The adjacency is always built from factual observed positions,
        never from overridden features.
        """
        s = self.store
        n = window.n_peds
        if adjacency is None:
            adjacency = self.adjacency(window, blocks=blocks)
        if node_override is None:
            x = constant(self.node_features(window))
        else:
            x = node_override if isinstance(node_override, Array) \
                else constant(node_override)
            if x.shape != self.node_feature_shape(n):
                raise ContractError(
                    f"node override shape {x.shape} does not match "
                    f"{self.node_feature_shape(n)}")

        h = relu(self._per_frame_linear(x, s["embed.w"], s["embed.b"]))
        frames = []
        for t in range(INPUT_STEPS):
            f_t = reshape(slice_axis(h, 2, t, t + 1), (n, self.config.gcn_hidden))
            frames.append(matmul(matmul(constant(adjacency[t]), f_t), s["gcn.w"]))
        g = relu(add(stack(frames, axis=2), s["gcn.b"]))          # (N, H, T)
        g = relu(add(temporal_conv(g, s["tconv_obs.k"],
                                   pad=(self.config.temporal_kernel - 1) // 2),
                     s["tconv_obs.b"]))
        flat = reshape(g, (n * self.config.gcn_hidden, INPUT_STEPS))
        ext = add(matmul(flat, s["extrap.w"]), s["extrap.b"])     # (N*H, 12)
        p = relu(reshape(ext, (n, self.config.gcn_hidden, PRED_LEN)))
        p = relu(add(temporal_conv(p, s["tconv_pred.k"],
                                   pad=(self.config.temporal_kernel - 1) // 2),
                     s["tconv_pred.b"]))
        out = self._per_frame_linear(p, s["head.w"], s["head.b"])  # (N, out, 12)
        out = transpose(out, (0, 2, 1))                            # (N, 12, out)
        if self.config.output_mode == "point":
            return out
        mu = slice_axis(out, 2, 0, 2)
        sigma = exp(slice_axis(out, 2, 2, 4))
        rho = tanh(slice_axis(out, 2, 4, 5))
        return GaussianParams(mu=mu, sigma=sigma, rho=rho)
