"""Seeded toy translation tasks for desk-scale experiments."""
import numpy as np


def _sentences(n: int, vocab_size: int, min_len: int, max_len: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        yield [int(w) for w in rng.integers(0, vocab_size, size=length)]


def reversal_corpus(n: int = 500, vocab_size: int = 50, min_len: int = 3, max_len: int = 8, seed: int = 0) -> list:
    """Source words ``sN``; the target is the word-by-word translation ``tN`` in reverse order.

    Ordering the output requires positional information about the source.
    """
    return [
        ([f"s{w}" for w in words], [f"t{w}" for w in reversed(words)])
        for words in _sentences(n, vocab_size, min_len, max_len, seed)
    ]


def copy_corpus(n: int = 500, vocab_size: int = 20, min_len: int = 2, max_len: int = 6, seed: int = 0) -> list:
    """Target equals the source."""
    return [
        ([f"w{w}" for w in words], [f"w{w}" for w in words])
        for words in _sentences(n, vocab_size, min_len, max_len, seed)
    ]


def write_parallel(pairs, src_path, tgt_path):
    with open(src_path, "w", encoding="utf-8") as fs, open(tgt_path, "w", encoding="utf-8") as ft:
        for src, tgt in pairs:
            fs.write(" ".join(src) + "\n")
            ft.write(" ".join(tgt) + "\n")
