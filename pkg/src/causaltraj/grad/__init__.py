"""Differentiable array substrate: primitives, tape, optimizer."""

from .engine import (
    Array,
    Tape,
    active_tape,
    add,
    as_array,
    backward,
    clamped_log,
    concat,
    constant,
    cumsum,
    div,
    elementwise_map,
    exp,
    leaky_relu,
    log,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    sigmoid,
    slice_axis,
    softmax,
    stack,
    sub,
    sum_,
    tanh,
    temporal_conv,
    transpose,
)
from .optim import OptimizerState, adam_step, clip_global_norm
from .params import ParameterStore, uniform_init

__all__ = [
    "Array", "Tape", "active_tape", "add", "as_array", "backward",
    "clamped_log", "concat", "constant", "cumsum", "div", "elementwise_map",
    "exp", "leaky_relu", "log", "matmul", "mean", "mul", "neg", "relu",
    "reshape", "sigmoid", "slice_axis", "softmax", "stack", "sub", "sum_",
    "tanh", "temporal_conv", "transpose",
    "OptimizerState", "adam_step", "clip_global_norm",
    "ParameterStore", "uniform_init",
]
