"""Attention capture and source representations."""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import xarray as xr

from nmt_ablation.errors import DataError


ROW_SUM_TOL = 1e-6


class AttentionRecord:
    """Decoder-to-source attention of one sentence pair.

    `weights[layer, head, t, i]` is the attention paid at target step t to
    source position i.
    """

    DIMS = ("layer", "head", "tgt", "src")

    def __init__(self, weights: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 4:
            raise DataError(f"attention weights need 4 axes (layer, head, tgt, src), got {weights.shape}")
        self.weights = weights

    def __repr__(self):
        return f"AttentionRecord(layers={self.num_layers}, heads={self.num_heads}, tgt={self.tgt_len}, src={self.src_len})"

    @property
    def shape(self) -> tuple:
        return self.weights.shape

    @property
    def num_layers(self) -> int:
        return self.weights.shape[0]

    @property
    def num_heads(self) -> int:
        return self.weights.shape[1]

    @property
    def tgt_len(self) -> int:
        return self.weights.shape[2]

    @property
    def src_len(self) -> int:
        return self.weights.shape[3]

    @property
    def is_empty(self) -> bool:
        return self.num_layers == 0

    def row_sum_error(self) -> float:
        """Largest deviation of any (layer, head, t) row from summing to 1."""
        if self.weights.size == 0:
            return 0.0
        return float(np.abs(self.weights.sum(axis=-1) - 1.0).max())

    def to_xarray(self) -> xr.DataArray:
        return xr.DataArray(self.weights, dims=self.DIMS, name="attention")

    @classmethod
    def empty(cls, tgt_len: int, src_len: int) -> "AttentionRecord":
        return cls(np.zeros((0, 0, tgt_len, src_len)))


class AttentionRecorder:
    """Collects batched [B, heads, T, S] weights, one entry per attention layer."""

    def __init__(self):
        self.layers = []

    def add(self, weights: np.ndarray):
        self.layers.append(np.array(weights, dtype=np.float64, copy=True))

    def sentence(self, index: int = 0, tgt_len: Optional[int] = None, src_len: Optional[int] = None) -> AttentionRecord:
        """The record of one batch row, trimmed to its unpadded lengths."""
        if not self.layers:
            return AttentionRecord.empty(tgt_len or 0, src_len or 0)
        weights = np.stack([layer[index] for layer in self.layers])
        return AttentionRecord(weights[:, :, :tgt_len, :src_len])


EMBEDDINGS_PLUS_POSITIONS = "embeddings_plus_positions"
EMBEDDINGS_ONLY = "embeddings"
ENCODER_OUTPUT = "encoder_output"


@dataclass
class SourceRepresentation:
    """What the decoder attends to for one source sentence: a [src_len, d_model] matrix."""

    matrix: np.ndarray
    provenance: str
