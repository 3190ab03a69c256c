from .gradcheck import check_gradients, numeric_grad, relative_error
from .optim import Adam, AdamState, adam_step
from .rng import Rng
from .tensor import (
    Tensor,
    add,
    as_tensor,
    backward,
    cross_entropy,
    div,
    dropout,
    embedding_gather,
    exp,
    gelu,
    getitem,
    is_grad_enabled,
    layer_norm,
    log,
    log_softmax,
    masked_fill,
    matmul,
    mean,
    mul,
    neg,
    no_grad,
    relu,
    reshape,
    softmax,
    sub,
    sum_,
    tanh,
    transpose,
)

__all__ = [
    "Adam", "AdamState", "Rng", "Tensor", "adam_step", "add", "as_tensor", "backward",
    "check_gradients", "cross_entropy", "div", "dropout", "embedding_gather", "exp", "gelu",
    "getitem", "is_grad_enabled", "layer_norm", "log", "log_softmax", "masked_fill", "matmul",
    "mean", "mul", "neg", "no_grad", "numeric_grad", "relative_error", "relu", "reshape",
    "softmax", "sub", "sum_", "tanh", "transpose",
]
