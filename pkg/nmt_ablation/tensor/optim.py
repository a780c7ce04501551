"""Adam optimiser and gradient utilities."""
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from nmt_ablation.errors import ContractError
from .tensor import Tensor


@dataclass
class AdamState:
    """Moment estimates and hyperparameters of Adam.

    `m` and `v` are keyed by parameter name; entries are created on the
    first update of each parameter.
    """

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def trainable(params: Mapping[str, Tensor]) -> dict:
    return {name: p for name, p in params.items() if p.requires_grad}


def zero_grad(params: Mapping[str, Tensor]):
    for p in params.values():
        p.grad = None


def adam_update(params: Mapping[str, Tensor], state: AdamState):
    """Apply one bias-corrected Adam step in place to every trainable parameter.

    Frozen parameters (`requires_grad=False`) are left untouched.

    Raises
    ------
    ContractError
        If a trainable parameter has no gradient.
    """
    params = trainable(params)
    for name, p in params.items():
        if p.grad is None:
            raise ContractError(f"parameter {name!r} has no gradient")

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, p in params.items():
        g = p.grad
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v

        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


def global_grad_norm(params: Mapping[str, Tensor]) -> float:
    total = sum(float(np.sum(p.grad * p.grad)) for p in params.values() if p.grad is not None)
    return float(np.sqrt(total))


def clip_grad_norm(params: Mapping[str, Tensor], max_norm: float) -> float:
    """Rescale gradients so that their global L2 norm is at most `max_norm`.

    Returns
    -------
    float, the norm before clipping
    """
    norm = global_grad_norm(params)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm
