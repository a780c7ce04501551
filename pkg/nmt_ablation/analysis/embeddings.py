"""Embedding probes and embedding transplantation between checkpoints."""
import logging
import math

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from nmt_ablation.data import RESERVED, Vocabulary
from nmt_ablation.errors import ConfigError, DimensionError
from nmt_ablation.model import Checkpoint


log = logging.getLogger(__name__)

TIED_EMBEDDINGS = ("embed.weight",)
UNTIED_EMBEDDINGS = ("embed.source.weight", "embed.target.weight")


def source_embedding_matrix(ckpt: Checkpoint) -> np.ndarray:
    name = "embed.weight" if ckpt.config.tie_embeddings else "embed.source.weight"
    return ckpt.params[name]


def cosine_similarities(matrix: np.ndarray, row: int) -> np.ndarray:
    """Cosine similarity of one row to every row; zero rows get similarity 0."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = 1.0 - cdist(matrix[row : row + 1], matrix, metric="cosine")[0]
    return np.nan_to_num(sims, nan=0.0)


def nearest_neighbors(
    matrix: np.ndarray,
    vocab: Vocabulary,
    token: str,
    k: int = 5,
    skip_reserved: bool = False,
) -> list:
    """The `k` tokens whose embeddings are closest to `token`'s by cosine similarity.

    The query is excluded and ties go to the smaller token id. With
    `skip_reserved` the PAD, BOS, EOS and UNK rows are not candidates either.

    Returns
    -------
    list[tuple[str, float]], (token, similarity) from most to least similar

    Raises
    ------
    VocabLookupError
        If `token` is not in the vocabulary.
    """
    if matrix.shape[0] != len(vocab):
        raise DimensionError(f"embedding matrix has {matrix.shape[0]} rows for a vocabulary of {len(vocab)}")
    query = vocab.lookup(token)
    sims = cosine_similarities(matrix, query)
    ids = np.arange(len(vocab))
    keep = ids != query
    if skip_reserved:
        keep &= ids >= len(RESERVED)
    ids, sims = ids[keep], sims[keep]
    order = np.lexsort((ids, -sims))[:k]
    return [(vocab.tokens[ids[i]], float(sims[i])) for i in order]


def frequent_token_neighbors(
    vocab: Vocabulary, matrix: np.ndarray, top: int = 150, k: int = 5, skip_reserved: bool = False
) -> pd.DataFrame:
    """Neighbours of the `top` most frequent tokens (the first non-reserved ids)."""
    rows = []
    for token in vocab.tokens[len(RESERVED) : len(RESERVED) + top]:
        for rank, (neighbor, sim) in enumerate(nearest_neighbors(matrix, vocab, token, k, skip_reserved), start=1):
            rows.append((token, rank, neighbor, sim))
    return pd.DataFrame(rows, columns=["token", "rank", "neighbor", "similarity"])


def transplant_embeddings(target: Checkpoint, source: Checkpoint, fixed: bool = False) -> Checkpoint:
    """Initialise `target`'s embeddings with `source`'s.

    Under tying this also sets the output projection, which shares the
    matrix. With `fixed` the copied parameters are frozen for later training.
    The result starts a fresh training run (index 0, no validation score).

    Raises
    ------
    ConfigError
        If vocabularies, embedding sizes or tying differ; the message lists every differing axis.
    """
    differing = []
    if target.vocab != source.vocab:
        differing.append(f"vocabulary ({len(target.vocab)} vs {len(source.vocab)} tokens)")
    if target.config.d_model != source.config.d_model:
        differing.append(f"d_model ({target.config.d_model} vs {source.config.d_model})")
    if target.config.tie_embeddings != source.config.tie_embeddings:
        differing.append(f"tie_embeddings ({target.config.tie_embeddings} vs {source.config.tie_embeddings})")
    if differing:
        raise ConfigError("cannot transplant embeddings, checkpoints differ in " + ", ".join(differing))

    names = TIED_EMBEDDINGS if target.config.tie_embeddings else UNTIED_EMBEDDINGS
    params = {name: value.copy() for name, value in target.params.items()}
    for name in names:
        params[name] = source.params[name].copy()
    frozen = target.frozen | frozenset(names) if fixed else target.frozen - frozenset(names)
    log.info("transplanted %s (%s)", ", ".join(names), "fixed" if fixed else "trainable")
    return Checkpoint(
        config=target.config,
        vocab=target.vocab,
        params=params,
        frozen=frozen,
        index=0,
        updates=0,
        val_ppl=math.inf,
        seed=target.seed,
    )
