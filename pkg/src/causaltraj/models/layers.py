"""Shared building blocks: interaction graphs, recurrent cells, attention."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..grad import (
    Array,
    add,
    concat,
    constant,
    leaky_relu,
    matmul,
    relu,
    sigmoid,
    slice_axis,
    softmax,
    tanh,
    transpose,
)


def adjacency_from_positions(positions: np.ndarray) -> np.ndarray:
    """Symmetrically normalized inverse-distance adjacency with self-loops.

    a_ij = 1/||p_i - p_j|| for distinct positions, 0 for coincident pairs;
    the result is D^{-1/2} (A + I) D^{-1/2}.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise ContractError(f"positions must be (N, 2); got {positions.shape}")
    n = positions.shape[0]
    delta = positions[:, None, :] - positions[None, :, :]
    dist = np.linalg.norm(delta, axis=2)
    with np.errstate(divide="ignore"):
        a = np.where(dist > 0.0, 1.0 / np.where(dist > 0.0, dist, 1.0), 0.0)
    np.fill_diagonal(a, 0.0)
    a = a + np.eye(n)
    d_inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    return a * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


def lstm_cell(x: Array, h: Array, c: Array, wx: Array, wh: Array, b: Array):
    """Standard gated recurrent update; gate order is (input, forget, cell, output)."""
    hidden = wh.shape[0]
    if x.shape[0] != h.shape[0] or h.shape != c.shape or wx.shape[1] != 4 * hidden:
        raise ContractError(
            f"lstm_cell shapes disagree: x{x.shape} h{h.shape} c{c.shape} "
            f"wx{wx.shape} wh{wh.shape}")
    gates = add(add(matmul(x, wx), matmul(h, wh)), b)
    i = sigmoid(slice_axis(gates, 1, 0, hidden))
    f = sigmoid(slice_axis(gates, 1, hidden, 2 * hidden))
    g = tanh(slice_axis(gates, 1, 2 * hidden, 3 * hidden))
    o = sigmoid(slice_axis(gates, 1, 3 * hidden, 4 * hidden))
    c_new = add(f * c, i * g)
    h_new = o * tanh(c_new)
    return h_new, c_new


def attention_mask(block_sizes: list[int]) -> np.ndarray:
    """Additive mask confining attention to block-diagonal groups.

    Cross-block entries get a large negative constant that underflows to
    exactly zero weight after the stable softmax, so a merged batch of
    windows reproduces the per-window attention exactly.
    """
    total = sum(block_sizes)
    mask = np.full((total, total), -1e30)
    start = 0
    for size in block_sizes:
        mask[start:start + size, start:start + size] = 0.0
        start += size
    return mask


def gat_layer(features: Array, head_params: list[tuple[Array, Array, Array]],
              slope: float = 0.2, mask: np.ndarray | None = None) -> Array:
    """Multi-head graph attention over a fully connected pedestrian graph.

    Each head is (w, a_src, a_dst): additive scoring
    e_ij = leaky_relu(a_src . Wh_i + a_dst . Wh_j), softmax over j, then
    attention-weighted aggregation. Heads are concatenated and activated.
    An optional additive mask restricts attention to window blocks.
    """
    outputs = []
    mask_arr = None if mask is None else constant(mask)
    for w, a_src, a_dst in head_params:
        wh = matmul(features, w)                       # (N, F')
        src = matmul(wh, a_src)                        # (N, 1)
        dst = matmul(wh, a_dst)                        # (N, 1)
        scores = leaky_relu(add(src, transpose(dst)), slope=slope)   # (N, N)
        if mask_arr is not None:
            scores = add(scores, mask_arr)
        alpha = softmax(scores, axis=1)
        outputs.append(matmul(alpha, wh))
    return relu(concat(outputs, axis=1))
