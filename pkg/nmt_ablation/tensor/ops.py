"""Composite neural-network operations with hand-written gradients."""
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from nmt_ablation.errors import DimensionError, ParameterError
from .tensor import Tensor, as_tensor, make_result, unbroadcast


LAYER_NORM_EPS = 1e-6


def softmax(x: Tensor, axis: int = -1, mask: Optional[np.ndarray] = None) -> Tensor:
    """Numerically stable softmax along `axis`.

    Parameters
    ----------
    x : Tensor, scores
    axis : int, axis normalised to sum to 1
    mask : np.ndarray[bool], optional, broadcastable to `x`; False entries get
        probability 0. Every slice must keep at least one entry.
    """
    scores = x.data
    if mask is not None:
        scores = np.where(mask, scores, -np.inf)
    shifted = scores - scores.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward_fn(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return make_result(out, (x,), backward_fn)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    out = x.data - logsumexp(x.data, axis=axis, keepdims=True)

    def backward_fn(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return make_result(out, (x,), backward_fn)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalise the last axis to zero mean and unit variance, then scale and shift."""
    if x.shape[-1] < 2:
        raise DimensionError(f"layer_norm needs a last axis of at least 2, got shape {x.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    lead_axes = tuple(range(x.ndim - 1))

    def backward_fn(g):
        gxhat = g * gain.data
        gx = inv_std * (
            gxhat
            - gxhat.mean(axis=-1, keepdims=True)
            - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return gx, (g * xhat).sum(axis=lead_axes), g.sum(axis=lead_axes)

    return make_result(xhat * gain.data + bias.data, (x, gain, bias), backward_fn)


def dropout(x: Tensor, rate: float, training: bool, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout: survivors are scaled by 1 / (1 - rate).

    Returns `x` itself when not training or when `rate` is 0.

    Raises
    ------
    ParameterError
        If `rate` is outside [0, 1).
    """
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return make_result(x.data * keep, (x,), lambda g: (g * keep,))


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of `weight` for an integer array of ids."""
    ids = np.asarray(ids, dtype=np.int64)

    def backward_fn(g):
        full = np.zeros_like(weight.data)
        np.add.at(full, ids, g)
        return (full,)

    return make_result(weight.data[ids], (weight,), backward_fn)


def pick(x: Tensor, ids: np.ndarray) -> Tensor:
    """Select one entry per position along the last axis (`x[..., ids]`)."""
    ids = np.asarray(ids, dtype=np.int64)[..., None]

    def backward_fn(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, ids, g[..., None], axis=-1)
        return (full,)

    return make_result(np.take_along_axis(x.data, ids, axis=-1)[..., 0], (x,), backward_fn)


def where(condition: np.ndarray, a, b) -> Tensor:
    """Select from `a` where `condition` holds, else from `b` (condition is constant)."""
    a, b = as_tensor(a), as_tensor(b)
    condition = np.asarray(condition, dtype=bool)
    return make_result(
        np.where(condition, a.data, b.data),
        (a, b),
        lambda g: (
            unbroadcast(np.where(condition, g, 0.0), a.shape),
            unbroadcast(np.where(condition, 0.0, g), b.shape),
        ),
    )
