from .tensor import (
    Tensor,
    as_tensor,
    backward,
    concat,
    exp,
    is_grad_enabled,
    log,
    matmul,
    mean,
    no_grad,
    relu,
    reshape,
    sigmoid,
    stack,
    tanh,
    transpose,
    tsum,
)
from .ops import dropout, embedding, layer_norm, log_softmax, pick, softmax, where
from .optim import AdamState, adam_update, clip_grad_norm, global_grad_norm, zero_grad
from .serialization import read_archive, write_archive
