"""Token-budget batching of encoded sentence pairs."""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from nmt_ablation.errors import DataError
from .corpus import ParallelPair
from .vocab import PAD


log = logging.getLogger(__name__)

DEFAULT_TOKEN_BUDGET = 2048


@dataclass
class Batch:
    """Padded id matrices for a group of sentence pairs.

    `target` holds BOS ... EOS; the decoder reads `target_input` and predicts
    `target_output`.
    """

    source: np.ndarray
    target: np.ndarray
    indices: tuple
    token_count: int

    @property
    def size(self) -> int:
        return self.source.shape[0]

    @property
    def source_mask(self) -> np.ndarray:
        return self.source != PAD

    @property
    def target_input(self) -> np.ndarray:
        return self.target[:, :-1]

    @property
    def target_output(self) -> np.ndarray:
        return self.target[:, 1:]

    @property
    def target_mask(self) -> np.ndarray:
        return self.target_output != PAD


def pad_ids(sequences: Sequence[Sequence[int]]) -> np.ndarray:
    width = max(len(s) for s in sequences)
    out = np.full((len(sequences), width), PAD, dtype=np.int64)
    for row, seq in enumerate(sequences):
        out[row, : len(seq)] = seq
    return out


def collate(pairs: Sequence[ParallelPair], indices: Sequence[int]) -> Batch:
    chosen = [pairs[i] for i in indices]
    return Batch(
        source=pad_ids([p.source for p in chosen]),
        target=pad_ids([p.target for p in chosen]),
        indices=tuple(indices),
        token_count=sum(p.target_tokens for p in chosen),
    )


def make_batches(
    pairs: Sequence[ParallelPair],
    token_budget: int = DEFAULT_TOKEN_BUDGET,
    shuffle_seed: Optional[int] = None,
) -> list:
    """Pack pairs into batches of at most `token_budget` target tokens.

    Pairs are bucketed by length (target, then source) and packed greedily.
    With a `shuffle_seed`, pairs of equal length are shuffled and the batch
    order is permuted; without one the order is fully deterministic by length.
    Every pair appears in exactly one batch. A pair larger than the budget is
    emitted alone, with a warning.

    Raises
    ------
    DataError
        If `pairs` is empty or contains an empty source sentence.
    """
    if not pairs:
        raise DataError("cannot batch an empty corpus")
    if any(len(p.source) == 0 for p in pairs):
        raise DataError("source sentences must not be empty")

    rng = np.random.default_rng(shuffle_seed) if shuffle_seed is not None else None
    tiebreak = rng.permutation(len(pairs)) if rng is not None else np.arange(len(pairs))
    order = sorted(
        range(len(pairs)),
        key=lambda i: (pairs[i].target_tokens, len(pairs[i].source), tiebreak[i]),
    )

    groups, current, current_tokens = [], [], 0
    for i in order:
        n = pairs[i].target_tokens
        if n > token_budget:
            log.warning("sentence pair %d has %d target tokens, above the budget of %d", i, n, token_budget)
            if current:
                groups.append(current)
                current, current_tokens = [], 0
            groups.append([i])
            continue
        if current and current_tokens + n > token_budget:
            groups.append(current)
            current, current_tokens = [], 0
        current.append(i)
        current_tokens += n
    if current:
        groups.append(current)

    if rng is not None:
        groups = [groups[k] for k in rng.permutation(len(groups))]
    return [collate(pairs, g) for g in groups]
