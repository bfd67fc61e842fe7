"""Reverse-mode differentiation over dense numpy arrays.

Forward primitives record themselves on the active :class:`Tape` in
execution order, which is automatically a topological order. A single
reverse sweep over the record yields exact gradients. Every primitive
checks its output for NaN/Inf and aborts with the producing op's name,
so divergence surfaces immediately instead of corrupting a run.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ContractError, DimensionError, NumericError

_uid_counter = itertools.count()

# Active tape for the current execution context. Training steps are
# single-threaded; concurrent runs must live in separate processes.
_active_tape: "Tape | None" = None


class Array:
    """Dense array with an autodiff identity.

    `data` is float64 by default (tests run at 64-bit); float32 is
    accepted for training-mode use.
    """

    __slots__ = ("data", "requires_grad", "uid")

    def __init__(self, data, requires_grad: bool = False, dtype=np.float64):
        arr = np.asarray(data, dtype=dtype)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.uid = next(_uid_counter)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Array(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; everything routes through the recorded primitives.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_array(x, dtype=np.float64) -> Array:
    """Coerce scalars/ndarrays to a constant Array."""
    if isinstance(x, Array):
        return x
    return Array(x, requires_grad=False, dtype=dtype)


def constant(x, dtype=np.float64) -> Array:
    """A detached copy: gradient never flows into it."""
    if isinstance(x, Array):
        return Array(np.array(x.data, dtype=dtype), requires_grad=False, dtype=dtype)
    return Array(np.array(x, dtype=dtype), requires_grad=False, dtype=dtype)


class TapeNode:
    __slots__ = ("op", "input_uids", "output_uid", "backward_fn")

    def __init__(self, op: str, input_uids: tuple[int, ...], output_uid: int,
                 backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]):
        self.op = op
        self.input_uids = input_uids
        self.output_uid = output_uid
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of executed primitives.

    Use as a context manager; primitives executed inside the block whose
    inputs require grad are appended in execution order.
    """

    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __enter__(self) -> "Tape":
        global _active_tape
        if _active_tape is not None:
            raise ContractError("nested tapes are not supported")
        _active_tape = self
        return self

    def __exit__(self, exc_type, exc, tb):
        global _active_tape
        _active_tape = None
        return False

    def __len__(self) -> int:
        return len(self.nodes)

    def is_topologically_ordered(self) -> bool:
        """Every node's inputs precede it (leaf or earlier output)."""
        produced_later = set()
        for node in reversed(self.nodes):
            if any(u in produced_later for u in node.input_uids):
                return False
            produced_later.add(node.output_uid)
        return True


def active_tape() -> Tape | None:
    return _active_tape


def _check_finite(op: str, data: np.ndarray) -> None:
    if not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite values produced by primitive '{op}'")


def _record(op: str, out: Array, inputs: Sequence[Array],
            backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]) -> Array:
    _check_finite(op, out.data)
    tape = _active_tape
    if tape is not None and any(a.requires_grad for a in inputs):
        out.requires_grad = True
        tape.nodes.append(TapeNode(op, tuple(a.uid for a in inputs), out.uid, backward_fn))
    return out


def backward(loss: Array, tape: Tape, wrt=None):
    """Reverse sweep from a scalar loss.

    Returns a ``{uid: gradient}`` map, or a ``{name: gradient}`` map with
    exact zeros for unreachable parameters when ``wrt`` is a ParameterStore
    (anything exposing ``.items()`` of name -> Array).
    """
    if loss.data.size != 1:
        raise ContractError(f"loss must be scalar, got shape {loss.data.shape}")
    grads: dict[int, np.ndarray] = {loss.uid: np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = grads.pop(node.output_uid, None)
        if g is None:
            continue
        input_grads = node.backward_fn(g)
        for uid, ig in zip(node.input_uids, input_grads):
            if ig is None:
                continue
            acc = grads.get(uid)
            if acc is None:
                grads[uid] = ig
            else:
                grads[uid] = acc + ig
    if wrt is None:
        return grads
    out = {}
    for name, param in wrt.items():
        g = grads.get(param.uid)
        out[name] = np.zeros_like(param.data) if g is None else g
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward pass."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# arithmetic primitives

def add(a, b) -> Array:
    a, b = as_array(a), as_array(b)
    out = Array(a.data + b.data)
    sa, sb = a.data.shape, b.data.shape
    return _record("add", out, (a, b),
                   lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Array:
    a, b = as_array(a), as_array(b)
    out = Array(a.data - b.data)
    sa, sb = a.data.shape, b.data.shape
    return _record("sub", out, (a, b),
                   lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Array:
    a, b = as_array(a), as_array(b)
    out = Array(a.data * b.data)
    sa, sb = a.data.shape, b.data.shape
    da, db = a.data, b.data
    return _record("mul", out, (a, b),
                   lambda g: (_unbroadcast(g * db, sa), _unbroadcast(g * da, sb)))


def div(a, b) -> Array:
    a, b = as_array(a), as_array(b)
    out = Array(a.data / b.data)
    sa, sb = a.data.shape, b.data.shape
    da, db = a.data, b.data
    return _record("div", out, (a, b),
                   lambda g: (_unbroadcast(g / db, sa),
                              _unbroadcast(-g * da / (db * db), sb)))


def neg(a) -> Array:
    a = as_array(a)
    out = Array(-a.data)
    return _record("neg", out, (a,), lambda g: (-g,))


def matmul(a, b) -> Array:
    a, b = as_array(a), as_array(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(
            f"matmul requires (m,k) @ (k,n); got {a.data.shape} and {b.data.shape}")
    out = Array(a.data @ b.data)
    da, db = a.data, b.data
    return _record("matmul", out, (a, b),
                   lambda g: (g @ db.T, da.T @ g))


# ---------------------------------------------------------------------------
# elementwise maps

def _tanh_fwd(x):
    return np.tanh(x)


def _sigmoid_fwd(x):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


_ELEMENTWISE = {
    "tanh": (_tanh_fwd, lambda x, y, g: g * (1.0 - y * y)),
    "sigmoid": (_sigmoid_fwd, lambda x, y, g: g * y * (1.0 - y)),
    "relu": (lambda x: np.maximum(x, 0.0), lambda x, y, g: g * (x > 0)),
    "exp": (np.exp, lambda x, y, g: g * y),
    "log": (np.log, lambda x, y, g: g / x),
}


def elementwise_map(x, f: str) -> Array:
    """Apply one of {tanh, sigmoid, relu, exp, log} per element."""
    if f not in _ELEMENTWISE:
        raise ContractError(f"unknown elementwise function '{f}'")
    x = as_array(x)
    if f == "log" and np.any(x.data <= 0.0):
        raise NumericError("log requires strictly positive inputs")
    fwd, bwd = _ELEMENTWISE[f]
    out = Array(fwd(x.data))
    xd, yd = x.data, out.data
    return _record(f, out, (x,), lambda g: (bwd(xd, yd, g),))


def tanh(x) -> Array:
    return elementwise_map(x, "tanh")


def sigmoid(x) -> Array:
    return elementwise_map(x, "sigmoid")


def relu(x) -> Array:
    return elementwise_map(x, "relu")


def exp(x) -> Array:
    return elementwise_map(x, "exp")


def log(x) -> Array:
    return elementwise_map(x, "log")


def leaky_relu(x, slope: float = 0.2) -> Array:
    x = as_array(x)
    out = Array(np.where(x.data > 0, x.data, slope * x.data))
    xd = x.data
    return _record("leaky_relu", out, (x,),
                   lambda g: (g * np.where(xd > 0, 1.0, slope),))


LOG_FLOOR = 1e-12


def clamped_log(x, floor: float = LOG_FLOOR) -> Array:
    """log with inputs clamped to a small positive floor (for NLL terms)."""
    x = as_array(x)
    clamped = np.maximum(x.data, floor)
    out = Array(np.log(clamped))
    xd = x.data
    return _record("clamped_log", out, (x,),
                   lambda g: (np.where(xd >= floor, g / np.maximum(xd, floor), 0.0),))


def softmax(x, axis: int = -1) -> Array:
    """Row-stable softmax (max-subtraction) along `axis`."""
    x = as_array(x)
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / np.sum(e, axis=axis, keepdims=True)
    out = Array(s)
    sd = out.data
    return _record("softmax", out, (x,),
                   lambda g: (sd * (g - np.sum(g * sd, axis=axis, keepdims=True)),))


# ---------------------------------------------------------------------------
# reductions and shape ops

def sum_(x, axis=None, keepdims: bool = False) -> Array:
    x = as_array(x)
    out = Array(np.sum(x.data, axis=axis, keepdims=keepdims))
    shape = x.data.shape

    def bwd(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis=axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _record("sum", out, (x,), bwd)


def mean(x, axis=None, keepdims: bool = False) -> Array:
    x = as_array(x)
    out = Array(np.mean(x.data, axis=axis, keepdims=keepdims))
    shape = x.data.shape
    if axis is None:
        n = x.data.size
    elif isinstance(axis, int):
        n = shape[axis]
    else:
        n = int(np.prod([shape[a] for a in axis]))

    def bwd(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis=axis)
        return (np.broadcast_to(g / n, shape).copy(),)

    return _record("mean", out, (x,), bwd)


def cumsum(x, axis: int) -> Array:
    x = as_array(x)
    out = Array(np.cumsum(x.data, axis=axis))
    return _record(
        "cumsum", out, (x,),
        lambda g: (np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis),))


def reshape(x, shape) -> Array:
    x = as_array(x)
    out = Array(np.reshape(x.data, shape))
    orig = x.data.shape
    return _record("reshape", out, (x,), lambda g: (g.reshape(orig),))


def transpose(x, axes=None) -> Array:
    x = as_array(x)
    out = Array(np.transpose(x.data, axes))
    if axes is None:
        inv = None
    else:
        inv = list(np.argsort(axes))
    return _record("transpose", out, (x,), lambda g: (np.transpose(g, inv),))


def concat(arrays: Iterable, axis: int = 0) -> Array:
    arrs = [as_array(a) for a in arrays]
    if not arrs:
        raise ContractError("concat requires at least one array")
    out = Array(np.concatenate([a.data for a in arrs], axis=axis))
    sizes = [a.data.shape[axis] for a in arrs]

    def bwd(g):
        pieces = []
        start = 0
        for s in sizes:
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, start + s)
            pieces.append(g[tuple(sl)])
            start += s
        return tuple(pieces)

    return _record("concat", out, tuple(arrs), bwd)


def stack(arrays: Iterable, axis: int = 0) -> Array:
    arrs = [as_array(a) for a in arrays]
    if not arrs:
        raise ContractError("stack requires at least one array")
    out = Array(np.stack([a.data for a in arrs], axis=axis))
    n = len(arrs)

    def bwd(g):
        return tuple(np.take(g, i, axis=axis) for i in range(n))

    return _record("stack", out, tuple(arrs), bwd)


def slice_axis(x, axis: int, start: int, stop: int) -> Array:
    x = as_array(x)
    sl = [slice(None)] * x.data.ndim
    sl[axis] = slice(start, stop)
    sl = tuple(sl)
    out = Array(x.data[sl])
    shape = x.data.shape

    def bwd(g):
        full = np.zeros(shape, dtype=g.dtype)
        full[sl] = g
        return (full,)

    return _record("slice", out, (x,), bwd)


def temporal_conv(x, kernel, pad: int = 0) -> Array:
    """Sliding-window correlation along the trailing time axis.

    `x` is (C_in, T) or batched (N, C_in, T); `kernel` is (C_out, C_in, k).
    Output length is T + 2*pad - k + 1.
    """
    x = as_array(x)
    kernel = as_array(kernel)
    if kernel.data.ndim != 3:
        raise DimensionError(
            f"temporal_conv kernel must be (C_out, C_in, k); got {kernel.data.shape}")
    squeeze = x.data.ndim == 2
    xd = x.data[None] if squeeze else x.data
    if xd.ndim != 3:
        raise DimensionError(
            f"temporal_conv input must be (C_in, T) or (N, C_in, T); got {x.data.shape}")
    n, c_in, t = xd.shape
    c_out, kc_in, k = kernel.data.shape
    if kc_in != c_in:
        raise DimensionError(
            f"kernel input channels {kc_in} do not match signal channels {c_in}")
    t_out = t + 2 * pad - k + 1
    if t_out < 1:
        raise DimensionError(
            f"kernel length {k} exceeds padded signal length {t + 2 * pad}")
    xp = np.pad(xd, ((0, 0), (0, 0), (pad, pad))) if pad else xd
    kd = kernel.data
    out_data = np.zeros((n, c_out, t_out))
    for j in range(k):
        out_data += np.einsum("oc,nct->not", kd[:, :, j], xp[:, :, j:j + t_out])
    out = Array(out_data[0] if squeeze else out_data)

    def bwd(g):
        gb = g[None] if squeeze else g
        dk = np.zeros_like(kd)
        dxp = np.zeros_like(xp)
        for j in range(k):
            win = xp[:, :, j:j + t_out]
            dk[:, :, j] = np.einsum("not,nct->oc", gb, win)
            dxp[:, :, j:j + t_out] += np.einsum("oc,not->nct", kd[:, :, j], gb)
        dx = dxp[:, :, pad:pad + t] if pad else dxp
        return (dx[0] if squeeze else dx, dk)

    return _record("temporal_conv", out, (x, kernel), bwd)
