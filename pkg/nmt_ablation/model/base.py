"""Behaviour shared by every model family."""
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from nmt_ablation.data import BOS, PAD
from nmt_ablation.errors import ContractError, DataError
from nmt_ablation.tensor import Tensor, log_softmax, no_grad
from .config import ModelConfig
from .layers import ParameterStore
from .record import AttentionRecorder, SourceRepresentation


@dataclass
class SourceState:
    """Encoded source batch handed to the decoder.

    Attributes
    ----------
    memory : Tensor [B, S, d], attention keys/values
    mask : np.ndarray[bool] [B, S], True on real (non-pad) source positions
    summary : Tensor [B, d], fixed source summary for attention-free decoders
    """

    memory: Tensor
    mask: np.ndarray
    summary: Optional[Tensor] = None

    def repeat(self, n: int) -> "SourceState":
        """Tile a single-sentence state `n` times along the batch axis."""
        rows = np.zeros(n, dtype=np.int64)
        return SourceState(
            memory=self.memory[rows],
            mask=self.mask[rows],
            summary=None if self.summary is None else self.summary[rows],
        )


def group_of(name: str) -> str:
    """Accounting group of a parameter: `encoder.<i>`/`decoder.<i>` or its first component."""
    parts = name.split(".")
    if parts[0] in ("encoder", "decoder"):
        return ".".join(parts[:2])
    return parts[0]


class Seq2SeqModel:
    """Encoder(-free) decoder translation model over a joint vocabulary."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.store = ParameterStore(rng)
        self.params = self.store.params

    # subclasses build these
    def encode(self, src_ids: np.ndarray, training: bool = False, rng=None) -> SourceState:
        raise NotImplementedError

    def decode(
        self,
        state: SourceState,
        tgt_in: np.ndarray,
        training: bool = False,
        rng=None,
        recorder: Optional[AttentionRecorder] = None,
    ) -> Tensor:
        raise NotImplementedError

    def source_provenance(self) -> str:
        raise NotImplementedError

    def check_ids(self, ids: np.ndarray):
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.config.vocab_size):
            raise ContractError(
                f"token ids must lie in [0, {self.config.vocab_size}), got range [{ids.min()}, {ids.max()}]"
            )

    def forward(
        self,
        src_ids: np.ndarray,
        tgt_in: np.ndarray,
        training: bool = False,
        rng=None,
        recorder: Optional[AttentionRecorder] = None,
    ) -> Tensor:
        """Logits [B, T, V] for batched source ids [B, S] and decoder inputs [B, T]."""
        src_ids = np.atleast_2d(np.asarray(src_ids, dtype=np.int64))
        tgt_in = np.atleast_2d(np.asarray(tgt_in, dtype=np.int64))
        self.check_ids(src_ids)
        self.check_ids(tgt_in)
        if not (src_ids != PAD).any(axis=1).all():
            raise DataError("every source sentence needs at least one non-pad token")
        state = self.encode(src_ids, training=training, rng=rng)
        return self.decode(state, tgt_in, training=training, rng=rng, recorder=recorder)

    def source_representation(self, src_ids: Iterable[int]) -> SourceRepresentation:
        """The [src_len, d_model] matrix the decoder attends to (inference mode)."""
        src = np.asarray(list(src_ids), dtype=np.int64)[None, :]
        self.check_ids(src)
        with no_grad():
            state = self.encode(src)
        return SourceRepresentation(matrix=state.memory.data[0].copy(), provenance=self.source_provenance())

    def step_log_probs(self, state: SourceState, prefixes: np.ndarray) -> np.ndarray:
        """Next-token log-probabilities [n, V] after each decoder prefix [n, t].

        PAD and BOS are never predicted.
        """
        with no_grad():
            logits = self.decode(state, np.asarray(prefixes, dtype=np.int64))
            out = log_softmax(logits[:, -1]).data.copy()
        out[:, PAD] = -np.inf
        out[:, BOS] = -np.inf
        return out

    # parameters
    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def parameter_groups(self) -> dict:
        groups = {}
        for name, p in self.params.items():
            key = group_of(name)
            groups[key] = groups.get(key, 0) + p.size
        return groups

    @property
    def frozen(self) -> frozenset:
        return frozenset(name for name, p in self.params.items() if not p.requires_grad)

    def freeze(self, names: Iterable[str]):
        for name in names:
            if name not in self.params:
                raise ContractError(f"cannot freeze unknown parameter {name!r}")
            self.params[name].requires_grad = False

    def state_dict(self) -> dict:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state_dict(self, arrays: Mapping[str, np.ndarray]):
        """Copy arrays into the parameters in place, keeping tied storage shared."""
        missing = set(self.params) - set(arrays)
        unexpected = set(arrays) - set(self.params)
        if missing or unexpected:
            raise ContractError(
                f"parameter mismatch: missing {sorted(missing)}, unexpected {sorted(unexpected)}"
            )
        for name, p in self.params.items():
            if arrays[name].shape != p.shape:
                raise ContractError(f"parameter {name!r} has shape {p.shape}, got {arrays[name].shape}")
            p.data[...] = arrays[name]
