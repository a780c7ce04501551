"""Beam search, greedy decoding and forced decoding."""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from pydantic import BaseModel, Extra, validator

from nmt_ablation.data import BOS, EOS
from nmt_ablation.errors import DataError, ParameterError
from nmt_ablation.model import AttentionRecord, AttentionRecorder, Seq2SeqModel
from nmt_ablation.tensor import log_softmax, no_grad, pick


log = logging.getLogger(__name__)


class DecodeConfig(BaseModel):
    beam: int = 8
    max_output_len: int = 100
    length_penalty: float = 1.0

    class Config:
        extra = Extra.forbid

    @validator("beam", "max_output_len")
    def at_least_one(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v


@dataclass(frozen=True)
class Hypothesis:
    """A (partial) translation. `tokens` excludes BOS and, when finished, ends in EOS."""

    tokens: tuple = ()
    log_prob: float = 0.0
    finished: bool = False
    forced: bool = False

    def __len__(self):
        return len(self.tokens)

    def score(self, length_penalty: float = 1.0) -> float:
        """Length-normalised log-probability."""
        return self.log_prob / max(len(self.tokens), 1) ** length_penalty

    @property
    def output(self) -> tuple:
        """Tokens without the closing EOS."""
        return self.tokens[:-1] if self.tokens and self.tokens[-1] == EOS else self.tokens


def _encode_one(model: Seq2SeqModel, src_ids: Sequence[int]):
    src = np.asarray(list(src_ids), dtype=np.int64)[None, :]
    if src.shape[1] == 0:
        raise DataError("cannot decode an empty source sentence")
    model.check_ids(src)
    with no_grad():
        return model.encode(src)


def beam_search(
    model: Seq2SeqModel,
    src_ids: Sequence[int],
    beam: int = 8,
    max_len: int = 100,
    length_penalty: float = 1.0,
) -> Hypothesis:
    """Best translation of one source sentence under beam search.

    Each step ranks all expansions of the live hypotheses; equal scores are
    ordered by token sequence so results are deterministic. EOS expansions
    within the first `beam` ranks are set aside as finished, and the live
    beam is refilled to `beam` hypotheses from the remaining ranks. The
    search stops once `beam` hypotheses have finished or none is left.
    At step `max_len` only EOS may be produced; those hypotheses are
    flagged `forced`. Finished hypotheses are ranked by
    log_prob / len ** length_penalty, and the greedy translation is always
    one of them, so a wider beam never scores below `beam=1`.

    Raises
    ------
    ParameterError
        If `beam` or `max_len` is below 1.
    """
    if beam < 1 or max_len < 1:
        raise ParameterError(f"beam and max_len must be >= 1, got {beam} and {max_len}")
    state = _encode_one(model, src_ids)
    alive = [Hypothesis()]
    finished = []

    for step in range(1, max_len + 1):
        prefixes = np.array([(BOS,) + h.tokens for h in alive], dtype=np.int64)
        logp = model.step_log_probs(state.repeat(len(alive)), prefixes)
        if step == max_len:
            only_eos = np.full_like(logp, -np.inf)
            only_eos[:, EOS] = logp[:, EOS]
            logp = only_eos
        totals = np.array([h.log_prob for h in alive])[:, None] + logp

        flat = totals.ravel()
        finite = np.flatnonzero(np.isfinite(flat))
        if finite.size == 0:
            break
        # each live hypothesis has one EOS expansion, so 2 * beam ranks hold `beam` non-EOS ones
        k = min(2 * beam, finite.size)
        threshold = np.partition(flat[finite], -k)[-k]
        candidates = [int(i) for i in finite if flat[i] >= threshold]
        vocab_size = totals.shape[1]
        candidates.sort(key=lambda i: (-flat[i], alive[i // vocab_size].tokens + (i % vocab_size,)))

        next_alive = []
        for rank, i in enumerate(candidates):
            parent, token = alive[i // vocab_size], i % vocab_size
            tokens = parent.tokens + (token,)
            if token == EOS:
                if rank < beam:
                    finished.append(Hypothesis(tokens, float(flat[i]), finished=True, forced=step == max_len))
            elif len(next_alive) < beam:
                next_alive.append(Hypothesis(tokens, float(flat[i])))
        alive = next_alive
        if len(finished) >= beam or not alive:
            break

    if beam > 1:
        finished.append(greedy_decode(model, src_ids, max_len))
    if not finished:
        raise DataError("beam search produced no finished hypothesis")
    best = min(finished, key=lambda h: (-h.score(length_penalty), h.tokens))
    if best.forced:
        log.warning("translation reached the maximum length of %d and was closed with EOS", max_len)
    return best


def greedy_decode(model: Seq2SeqModel, src_ids: Sequence[int], max_len: int = 100) -> Hypothesis:
    """Argmax decoding; ties go to the smaller token id."""
    if max_len < 1:
        raise ParameterError(f"max_len must be >= 1, got {max_len}")
    state = _encode_one(model, src_ids)
    tokens, total = (), 0.0
    for step in range(1, max_len + 1):
        logp = model.step_log_probs(state, np.array([(BOS,) + tokens], dtype=np.int64))[0]
        token = EOS if step == max_len else int(np.argmax(logp))
        total += float(logp[token])
        tokens += (token,)
        if token == EOS:
            break
    return Hypothesis(tokens, total, finished=True, forced=len(tokens) == max_len)


@dataclass
class ForcedDecoding:
    """Reference tokens, their log-probability and the attention paid while producing them."""

    tokens: tuple
    log_prob: float
    record: AttentionRecord


def forced_decode(model: Seq2SeqModel, src_ids: Sequence[int], ref_ids: Sequence[int]) -> ForcedDecoding:
    """Feed the reference to the decoder and capture its attention over the source.

    The whole reference is decoded in one causally-masked pass, which is
    equivalent to feeding it step by step. Row t of the record is the
    attention paid while producing `ref_ids[t]`.

    Parameters
    ----------
    model : Seq2SeqModel
    src_ids : source token ids (no BOS/EOS)
    ref_ids : reference target token ids (no BOS/EOS)

    Returns
    -------
    ForcedDecoding, record of shape (decoder layers, heads, len(ref_ids), len(src_ids));
        empty (zero layers) for models without attention

    Raises
    ------
    DataError
        If the reference or the source is empty.
    """
    ref = np.asarray(list(ref_ids), dtype=np.int64)
    if ref.size == 0:
        raise DataError("forced decoding needs a non-empty reference")
    state = _encode_one(model, src_ids)
    model.check_ids(ref[None])
    src_len = state.mask.shape[1]

    recorder = AttentionRecorder()
    decoder_input = np.concatenate([[BOS], ref[:-1]])[None, :]
    with no_grad():
        logits = model.decode(state, decoder_input, recorder=recorder)
        log_prob = float(pick(log_softmax(logits), ref[None]).data.sum())
    record = recorder.sentence(0, tgt_len=ref.size, src_len=src_len)
    return ForcedDecoding(tokens=tuple(int(t) for t in ref), log_prob=log_prob, record=record)
