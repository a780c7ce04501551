"""Parameterised building blocks shared by the transformer and RNN models."""
import functools
import math
from typing import Optional

import numpy as np

from nmt_ablation.errors import ConfigError, DimensionError
from nmt_ablation.tensor import (
    Tensor,
    dropout,
    embedding,
    layer_norm,
    relu,
    sigmoid,
    softmax,
    stack,
    tanh,
)
from .record import AttentionRecorder


class ParameterStore:
    """Ordered, named collection of trainable tensors."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.params = {}

    def add(self, name: str, data) -> Tensor:
        if name in self.params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        param = Tensor(data, requires_grad=True, name=name)
        self.params[name] = param
        return param

    def glorot(self, name: str, shape: tuple) -> Tensor:
        limit = math.sqrt(6.0 / (shape[0] + shape[1]))
        return self.add(name, self.rng.uniform(-limit, limit, size=shape))

    def normal(self, name: str, shape: tuple, std: float) -> Tensor:
        return self.add(name, self.rng.normal(0.0, std, size=shape))

    def zeros(self, name: str, shape: tuple) -> Tensor:
        return self.add(name, np.zeros(shape))

    def ones(self, name: str, shape: tuple) -> Tensor:
        return self.add(name, np.ones(shape))


@functools.lru_cache(maxsize=32)
def _sinusoid_table(length: int, d_model: int) -> np.ndarray:
    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = np.power(10000.0, np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    table = np.zeros((length, d_model))
    table[:, 0::2] = np.sin(positions / rates)
    table[:, 1::2] = np.cos(positions / rates)
    table.flags.writeable = False
    return table


def sinusoid_positions(length: int, d_model: int) -> Tensor:
    """Fixed position features: sin on even dimensions, cos on odd dimensions.

    Raises
    ------
    ConfigError
        If `d_model` is odd.
    """
    if d_model % 2:
        raise ConfigError(f"sinusoid positions need an even d_model, got {d_model}")
    return Tensor(_sinusoid_table(length, d_model))


class Linear:
    def __init__(self, store: ParameterStore, name: str, d_in: int, d_out: int):
        self.d_in = d_in
        self.weight = store.glorot(f"{name}.weight", (d_in, d_out))
        self.bias = store.zeros(f"{name}.bias", (d_out,))

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class LayerNorm:
    def __init__(self, store: ParameterStore, name: str, d: int):
        self.gain = store.ones(f"{name}.gain", (d,))
        self.bias = store.zeros(f"{name}.bias", (d,))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias)


class FeedForward:
    def __init__(self, store: ParameterStore, name: str, d: int, ff_dim: int):
        self.inner = Linear(store, f"{name}.inner", d, ff_dim)
        self.outer = Linear(store, f"{name}.outer", ff_dim, d)

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(relu(self.inner(x)))


class MultiHeadAttention:
    """Scaled dot-product attention over `heads` subspaces of size d/heads."""

    def __init__(self, store: ParameterStore, name: str, d_model: int, heads: int):
        if d_model % heads:
            raise ConfigError(f"heads ({heads}) must divide d_model ({d_model})")
        self.d_model = d_model
        self.heads = heads
        self.query = Linear(store, f"{name}.query", d_model, d_model)
        self.key = Linear(store, f"{name}.key", d_model, d_model)
        self.value = Linear(store, f"{name}.value", d_model, d_model)
        self.output = Linear(store, f"{name}.output", d_model, d_model)

    def _split(self, x: Tensor) -> Tensor:
        b, n, _ = x.shape
        return x.reshape(b, n, self.heads, self.d_model // self.heads).transpose(0, 2, 1, 3)

    def __call__(
        self,
        queries: Tensor,
        keys: Tensor,
        values: Tensor,
        mask: Optional[np.ndarray] = None,
        recorder: Optional[AttentionRecorder] = None,
    ) -> Tensor:
        """Attend from `queries` [B, T, d] to `keys`/`values` [B, S, d].

        `mask` broadcasts to [B, heads, T, S]; False entries are excluded.
        The [B, heads, T, S] weights are appended to `recorder` when given.
        """
        if queries.ndim != 3 or keys.ndim != 3 or values.shape != keys.shape:
            raise DimensionError(
                f"attention expects [B, T, d] queries and matching [B, S, d] keys/values, "
                f"got {queries.shape}, {keys.shape}, {values.shape}"
            )
        if queries.shape[-1] != self.d_model or keys.shape[-1] != self.d_model or queries.shape[0] != keys.shape[0]:
            raise DimensionError(f"cannot attend from {queries.shape} to {keys.shape} with d_model={self.d_model}")

        b, t, _ = queries.shape
        q = self._split(self.query(queries))
        k = self._split(self.key(keys))
        v = self._split(self.value(values))
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(self.d_model // self.heads))
        weights = softmax(scores, axis=-1, mask=mask)
        if recorder is not None:
            recorder.add(weights.data)
        context = (weights @ v).transpose(0, 2, 1, 3).reshape(b, t, self.d_model)
        return self.output(context)


class Embeddings:
    """Token embeddings and the output projection.

    With tying, source embedding, target embedding and output projection are
    one tensor (`embed.weight`); the output layer keeps its own bias.
    """

    def __init__(self, store: ParameterStore, vocab_size: int, d_model: int, tie: bool):
        self.d_model = d_model
        self.scale = math.sqrt(d_model)
        std = d_model**-0.5
        if tie:
            self.source = store.normal("embed.weight", (vocab_size, d_model), std)
            self.target = self.source
            self.output_weight = self.source
        else:
            self.source = store.normal("embed.source.weight", (vocab_size, d_model), std)
            self.target = store.normal("embed.target.weight", (vocab_size, d_model), std)
            self.output_weight = store.normal("output.weight", (vocab_size, d_model), std)
        self.output_bias = store.zeros("output.bias", (vocab_size,))

    def source_tokens(self, ids: np.ndarray) -> Tensor:
        return embedding(self.source, ids) * self.scale

    def target_tokens(self, ids: np.ndarray) -> Tensor:
        return embedding(self.target, ids) * self.scale

    def logits(self, hidden: Tensor) -> Tensor:
        return hidden @ self.output_weight.T + self.output_bias


class LSTMLayer:
    """Unidirectional LSTM; padded steps carry the previous state forward."""

    def __init__(self, store: ParameterStore, name: str, d_in: int, d_hidden: int):
        self.d_hidden = d_hidden
        self.w_input = store.glorot(f"{name}.w_input", (d_in, 4 * d_hidden))
        self.w_hidden = store.glorot(f"{name}.w_hidden", (d_hidden, 4 * d_hidden))
        bias = np.zeros(4 * d_hidden)
        bias[d_hidden : 2 * d_hidden] = 1.0  # forget gate
        self.bias = store.add(f"{name}.bias", bias)

    def __call__(self, x: Tensor, mask: np.ndarray) -> tuple:
        """Run over [B, T, d_in] inputs.

        Returns
        -------
        tuple[Tensor, Tensor], outputs [B, T, d_hidden] and the state after the
            last unmasked step [B, d_hidden]
        """
        b, steps, _ = x.shape
        n = self.d_hidden
        projected = x @ self.w_input + self.bias
        h = Tensor(np.zeros((b, n)))
        c = Tensor(np.zeros((b, n)))
        outputs = []
        for t in range(steps):
            gates = projected[:, t] + h @ self.w_hidden
            i = sigmoid(gates[:, :n])
            f = sigmoid(gates[:, n : 2 * n])
            g = tanh(gates[:, 2 * n : 3 * n])
            o = sigmoid(gates[:, 3 * n :])
            c_next = f * c + i * g
            h_next = o * tanh(c_next)
            keep = mask[:, t, None].astype(np.float64)
            c = c_next * keep + c * (1.0 - keep)
            h = h_next * keep + h * (1.0 - keep)
            outputs.append(h)
        return stack(outputs, axis=1), h


class LSTMStack:
    """Stacked LSTM layers with dropout between layers."""

    def __init__(self, store: ParameterStore, name: str, d_in: int, d_hidden: int, num_layers: int, rate: float):
        self.rate = rate
        self.layers = [
            LSTMLayer(store, f"{name}.{i}", d_in if i == 0 else d_hidden, d_hidden)
            for i in range(num_layers)
        ]

    def __call__(self, x: Tensor, mask: np.ndarray, training: bool, rng) -> tuple:
        final = None
        for i, layer in enumerate(self.layers):
            if i > 0:
                x = dropout(x, self.rate, training, rng)
            x, final = layer(x, mask)
        return x, final
