"""Minimal differentiable tensor core: exactly the ops the models need."""

from .gradcheck import grad_check
from .ops import (
    add,
    concat,
    constant,
    cumsum,
    dropout,
    embedding,
    gather_last,
    getitem,
    layer_norm,
    log_softmax,
    logsumexp,
    logsumexp_vec,
    matmul,
    mean,
    mul,
    neg,
    parameter,
    relu,
    reshape,
    scale,
    scatter,
    sigmoid,
    softmax,
    stack,
    sub,
    swapaxes,
    tanh,
    tsum,
)
from .tensor import (
    ShapeError,
    Tape,
    Tensor,
    active_tape,
    default_dtype,
    float_mode,
    set_float_mode,
)

__all__ = [
    "ShapeError",
    "Tape",
    "Tensor",
    "active_tape",
    "add",
    "concat",
    "constant",
    "cumsum",
    "default_dtype",
    "dropout",
    "embedding",
    "float_mode",
    "gather_last",
    "getitem",
    "grad_check",
    "layer_norm",
    "log_softmax",
    "logsumexp",
    "logsumexp_vec",
    "matmul",
    "mean",
    "mul",
    "neg",
    "parameter",
    "relu",
    "reshape",
    "scale",
    "scatter",
    "set_float_mode",
    "sigmoid",
    "softmax",
    "stack",
    "sub",
    "swapaxes",
    "tanh",
    "tsum",
]
