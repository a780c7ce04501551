"""Parallel corpus reading, filtering and id encoding."""
import logging
from typing import NamedTuple, Sequence

from nmt_ablation.errors import DataError
from .vocab import Vocabulary


log = logging.getLogger(__name__)

MAX_LEN = 100
MAX_RATIO = 9.0


class ParallelPair(NamedTuple):
    """Encoded sentence pair. The target carries BOS and EOS, the source neither."""

    source: tuple
    target: tuple

    @property
    def target_tokens(self) -> int:
        """Target positions the decoder predicts (target tokens plus EOS)."""
        return len(self.target) - 1


def read_lines(path) -> list:
    with open(path, encoding="utf-8") as fp:
        return [line.rstrip("\n") for line in fp]


def read_parallel(src_path, tgt_path) -> list:
    """Read two aligned UTF-8 files into a list of (source tokens, target tokens).

    Raises
    ------
    DataError
        If the files have different numbers of lines.
    """
    src, tgt = read_lines(src_path), read_lines(tgt_path)
    if len(src) != len(tgt):
        raise DataError(f"{src_path} has {len(src)} lines but {tgt_path} has {len(tgt)}")
    return [(s.split(), t.split()) for s, t in zip(src, tgt)]


def filter_pairs(pairs: Sequence[tuple], max_len: int = MAX_LEN, max_ratio: float = MAX_RATIO) -> list:
    """Drop empty pairs, pairs longer than `max_len` and pairs whose length ratio exceeds `max_ratio`."""
    kept = []
    for src, tgt in pairs:
        if not src or not tgt:
            continue
        if len(src) > max_len or len(tgt) > max_len:
            continue
        if max(len(src), len(tgt)) / min(len(src), len(tgt)) > max_ratio:
            continue
        kept.append((src, tgt))
    if len(kept) < len(pairs):
        log.info("filtered %d of %d sentence pairs", len(pairs) - len(kept), len(pairs))
    return kept


def encode_sentence(vocab: Vocabulary, tokens: Sequence[str], target: bool = False) -> tuple:
    return tuple(vocab.encode(tokens, add_bos_eos=target))


def encode_corpus(vocab: Vocabulary, pairs: Sequence[tuple]) -> list:
    """Map tokenised pairs to ids; BOS/EOS are added on the target side only."""
    return [
        ParallelPair(encode_sentence(vocab, src), encode_sentence(vocab, tgt, target=True))
        for src, tgt in pairs
    ]
