"""Word alignments read off attention weights, and their error rate against gold links."""
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np

from nmt_ablation.errors import ContractError, DataError
from nmt_ablation.model import AttentionRecord


# (source word index, target word index), 0-based
AlignmentLinks = FrozenSet[Tuple[int, int]]


@dataclass(frozen=True)
class GoldAlignment:
    sure: AlignmentLinks
    possible: AlignmentLinks

    def __post_init__(self):
        if not self.sure <= self.possible:
            raise DataError(f"sure links {sorted(self.sure - self.possible)} are not possible links")


def _check_spans(spans: Sequence[Tuple[int, int]], length: int, axis: str) -> np.ndarray:
    """Start offsets of `spans` after checking they partition range(length)."""
    expected = 0
    for start, end in spans:
        if start != expected or end < start:
            raise ContractError(f"{axis} spans {list(spans)} do not partition {length} subwords")
        expected = end + 1
    if expected != length:
        raise ContractError(f"{axis} spans {list(spans)} do not partition {length} subwords")
    return np.array([start for start, _ in spans], dtype=np.int64)


def identity_spans(length: int) -> list:
    return [(i, i) for i in range(length)]


def merge_subword_attention(
    weights: np.ndarray,
    src_spans: Sequence[Tuple[int, int]],
    tgt_spans: Sequence[Tuple[int, int]],
) -> np.ndarray:
    """Word-level attention from subword-level attention.

    Columns of a split source word are summed, then rows of a split target
    word are averaged.

    Parameters
    ----------
    weights : np.ndarray [target subwords, source subwords]
    src_spans, tgt_spans : inclusive (first, last) subword index of every word

    Returns
    -------
    np.ndarray [target words, source words]

    Raises
    ------
    ContractError
        If the spans do not partition their axis.
    """
    weights = np.asarray(weights, dtype=np.float64)
    src_starts = _check_spans(src_spans, weights.shape[1], "source")
    tgt_starts = _check_spans(tgt_spans, weights.shape[0], "target")
    summed = np.add.reduceat(weights, src_starts, axis=1)
    lengths = np.array([end - start + 1 for start, end in tgt_spans], dtype=np.float64)
    return np.add.reduceat(summed, tgt_starts, axis=0) / lengths[:, None]


def links_from_matrix(weights: np.ndarray, bidirectional: bool = True) -> AlignmentLinks:
    """Argmax links of a [target, source] matrix; ties go to the smaller index."""
    links = {(int(np.argmax(row)), t) for t, row in enumerate(weights)}
    if bidirectional:
        links |= {(s, int(np.argmax(col))) for s, col in enumerate(weights.T)}
    return frozenset(links)


def extract_alignment(
    record: AttentionRecord,
    src_spans: Optional[Sequence[Tuple[int, int]]] = None,
    tgt_spans: Optional[Sequence[Tuple[int, int]]] = None,
    layer: int = 0,
    bidirectional: bool = True,
    head_reduce: str = "sum",
) -> AlignmentLinks:
    """Word alignment from one decoder layer's attention.

    Heads are summed (or maximised with `head_reduce="max"`), subwords are
    merged, then every target word is linked to its most attended source
    word and, when `bidirectional`, every source word to the target word
    attending to it most.
    """
    if not 0 <= layer < record.num_layers:
        raise ContractError(f"layer {layer} out of range for a record with {record.num_layers} layers")
    if head_reduce not in ("sum", "max"):
        raise ContractError(f"head_reduce must be 'sum' or 'max', got {head_reduce!r}")
    heads = record.weights[layer]
    matrix = heads.sum(axis=0) if head_reduce == "sum" else heads.max(axis=0)
    src_spans = src_spans if src_spans is not None else identity_spans(record.src_len)
    tgt_spans = tgt_spans if tgt_spans is not None else identity_spans(record.tgt_len)
    return links_from_matrix(merge_subword_attention(matrix, src_spans, tgt_spans), bidirectional)


def _counts(pred: AlignmentLinks, gold: GoldAlignment) -> tuple:
    if not gold.sure <= gold.possible:
        raise DataError("sure links must be a subset of possible links")
    return len(pred & gold.sure) + len(pred & gold.possible), len(pred) + len(gold.sure)


def aer(pred: AlignmentLinks, gold: GoldAlignment) -> float:
    """Alignment error rate, 1 - (|A & S| + |A & P|) / (|A| + |S|).

    Defined as 0 when both A and S are empty.
    """
    matched, total = _counts(frozenset(pred), gold)
    return 0.0 if total == 0 else 1.0 - matched / total


def corpus_aer(preds: Iterable[AlignmentLinks], golds: Iterable[GoldAlignment]) -> float:
    """AER with link counts summed over all sentences before taking the ratio."""
    preds, golds = list(preds), list(golds)
    if len(preds) != len(golds):
        raise DataError(f"{len(preds)} predicted alignments for {len(golds)} gold alignments")
    matched = total = 0
    for pred, gold in zip(preds, golds):
        m, t = _counts(frozenset(pred), gold)
        matched += m
        total += t
    return 0.0 if total == 0 else 1.0 - matched / total


def parse_gold_line(line: str) -> GoldAlignment:
    """Parse Pharaoh links: `i-j` is sure, `i?j` possible. Sure links are also possible."""
    sure, possible = set(), set()
    for item in line.split():
        sep = "-" if "-" in item else "?"
        try:
            i, j = (int(x) for x in item.split(sep))
        except ValueError:
            raise DataError(f"malformed alignment link {item!r}") from None
        possible.add((i, j))
        if sep == "-":
            sure.add((i, j))
    return GoldAlignment(frozenset(sure), frozenset(possible))


def read_gold_alignments(path) -> list:
    with open(path, encoding="utf-8") as fp:
        return [parse_gold_line(line) for line in fp]


def format_links(links: AlignmentLinks) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def write_links(path, alignments: Iterable[AlignmentLinks]):
    with open(path, "w", encoding="utf-8") as fp:
        for links in alignments:
            fp.write(format_links(links) + "\n")


def read_links(path) -> list:
    """Predicted alignments in Pharaoh format (every link taken as given)."""
    with open(path, encoding="utf-8") as fp:
        return [parse_gold_line(line).possible for line in fp]
