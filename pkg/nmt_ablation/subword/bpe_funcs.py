"""Byte-pair encoding: learning, segmentation and word restoration.

Segmentation follows the continuation convention: every subword except the
last one of a word carries the marker (default ``@@``), so that

    restore_words(apply_bpe(model, s))[0] == s.split()

for any text that does not contain the marker literal.
"""
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from nmt_ablation.errors import ContractError, DataError


log = logging.getLogger(__name__)

END_OF_WORD = "</w>"
DEFAULT_MARKER = "@@"
DEFAULT_NUM_MERGES = 32000
TOY_NUM_MERGES = 500
MERGES_VERSION = "#version: nmt-ablation bpe 1"


@dataclass(frozen=True)
class BpeModel:
    """Ordered merge operations of a learned BPE model."""

    merges: tuple
    marker: str = DEFAULT_MARKER
    _ranks: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.merges)) != len(self.merges):
            raise DataError("BPE merges must be unique")
        self._ranks.update({pair: i for i, pair in enumerate(self.merges)})

    @property
    def num_merges(self) -> int:
        return len(self.merges)

    def segment_word(self, word: str) -> tuple:
        """Split a single word into subwords (without continuation markers)."""
        cached = self._cache.get(word)
        if cached is not None:
            return cached

        symbols = list(word[:-1]) + [word[-1] + END_OF_WORD]
        while len(symbols) > 1:
            pairs = [(symbols[i], symbols[i + 1]) for i in range(len(symbols) - 1)]
            best = min(pairs, key=lambda p: self._ranks.get(p, float("inf")))
            if best not in self._ranks:
                break
            symbols = _merge_symbols(symbols, best)

        symbols[-1] = symbols[-1][: -len(END_OF_WORD)]
        result = tuple(symbols)
        self._cache[word] = result
        return result


def _merge_symbols(symbols: Sequence[str], pair: tuple) -> list:
    merged, i = [], 0
    while i < len(symbols):
        if i < len(symbols) - 1 and (symbols[i], symbols[i + 1]) == pair:
            merged.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return merged


def _word_pairs(symbols: Sequence[str]) -> Counter:
    return Counter(zip(symbols, symbols[1:]))


def word_counts(corpus: Iterable[Union[str, Sequence[str]]]) -> Counter:
    """Count whitespace-separated words over sentences (strings or token lists)."""
    counts = Counter()
    for sentence in corpus:
        tokens = sentence.split() if isinstance(sentence, str) else sentence
        counts.update(tokens)
    return counts


def learn_bpe(corpus: Iterable[Union[str, Sequence[str]]], num_merges: int, marker: str = DEFAULT_MARKER) -> BpeModel:
    """Learn up to `num_merges` greedy most-frequent-pair merges.

    Pair frequencies are weighted by word frequency. Equal frequencies are
    broken by the lexicographically smallest pair. Learning stops early when
    no pair is left to merge.

    Parameters
    ----------
    corpus : iterable of sentences, each a string or a list of tokens
    num_merges : int, number of merge operations to learn
    marker : str, continuation marker used when applying the model

    Raises
    ------
    DataError
        If the corpus contains no words.
    ContractError
        If `num_merges` is negative.
    """
    if num_merges < 0:
        raise ContractError(f"num_merges must be non-negative, got {num_merges}")
    counts = word_counts(corpus)
    if not counts:
        raise DataError("cannot learn BPE from an empty corpus")

    words = [list(w[:-1]) + [w[-1] + END_OF_WORD] for w in sorted(counts)]
    freqs = [counts[w] for w in sorted(counts)]

    stats = Counter()
    index = defaultdict(set)
    for wi, symbols in enumerate(words):
        for pair, n in _word_pairs(symbols).items():
            stats[pair] += n * freqs[wi]
            index[pair].add(wi)

    merges = []
    while len(merges) < num_merges and stats:
        best, _ = min(stats.items(), key=lambda kv: (-kv[1], kv[0]))
        for wi in sorted(index.pop(best, ())):
            old = words[wi]
            new = _merge_symbols(old, best)
            for pair, n in _word_pairs(old).items():
                stats[pair] -= n * freqs[wi]
                if stats[pair] <= 0:
                    del stats[pair]
                if pair != best:
                    index[pair].discard(wi)
            for pair, n in _word_pairs(new).items():
                stats[pair] += n * freqs[wi]
                index[pair].add(wi)
            words[wi] = new
        stats.pop(best, None)
        merges.append(best)

    if len(merges) < num_merges:
        log.info("BPE learning stopped after %d merges: no pairs left", len(merges))
    return BpeModel(merges=tuple(merges), marker=marker)


def apply_bpe(model: BpeModel, sentence: Union[str, Sequence[str]]) -> list:
    """Segment every word of `sentence`; non-final subwords carry the marker."""
    tokens = sentence.split() if isinstance(sentence, str) else sentence
    out = []
    for word in tokens:
        pieces = model.segment_word(word)
        out.extend(p + model.marker for p in pieces[:-1])
        out.append(pieces[-1])
    return out


def restore_words(subwords: Sequence[str], marker: str = DEFAULT_MARKER) -> tuple:
    """Join marked subwords back into words.

    A dangling marker on the last subword closes the word at the end of the
    sequence.

    Returns
    -------
    tuple[list[str], list[tuple[int, int]]]
        words, and for each word the inclusive (first, last) subword index
    """
    words, spans = [], []
    pieces, start = [], 0
    for i, sub in enumerate(subwords):
        if sub.endswith(marker):
            pieces.append(sub[: -len(marker)])
            continue
        pieces.append(sub)
        words.append("".join(pieces))
        spans.append((start, i))
        pieces, start = [], i + 1
    if pieces:
        words.append("".join(pieces))
        spans.append((start, len(subwords) - 1))
    return words, spans


def save_merges(model: BpeModel, path):
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(MERGES_VERSION + "\n")
        for first, second in model.merges:
            fp.write(f"{first} {second}\n")


def load_merges(path, marker: str = DEFAULT_MARKER) -> BpeModel:
    """Read a merge file: a version comment, then one space-separated pair per line."""
    merges = []
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            line = line.rstrip("\n")
            if lineno == 1 and line.startswith("#version"):
                continue
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected two symbols, got {line!r}")
            merges.append(tuple(parts))
    return BpeModel(merges=tuple(merges), marker=marker)
