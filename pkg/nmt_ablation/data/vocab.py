"""Token/id mapping with four reserved entries."""
from collections import Counter
from typing import Iterable, Sequence

from nmt_ablation.errors import DataError, VocabLookupError


PAD, BOS, EOS, UNK = 0, 1, 2, 3
PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN = "<pad>", "<s>", "</s>", "<unk>"
RESERVED = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN)


class Vocabulary:
    """Bijective token/id mapping. Ids 0-3 are PAD, BOS, EOS and UNK."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[: len(RESERVED)]) != RESERVED:
            raise DataError(f"vocabulary must start with the reserved tokens {RESERVED}")
        if len(set(tokens)) != len(tokens):
            raise DataError("vocabulary tokens must be unique")
        self.tokens = tokens
        self.index = {tok: i for i, tok in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __contains__(self, token):
        return token in self.index

    def id_of(self, token: str) -> int:
        """Id of `token` in text; unknown tokens and the literals of PAD, BOS and EOS map to UNK."""
        idx = self.index.get(token, UNK)
        return UNK if idx in (PAD, BOS, EOS) else idx

    def lookup(self, token: str) -> int:
        """Id of `token`; unlike `id_of`, unknown tokens raise `VocabLookupError`."""
        try:
            return self.index[token]
        except KeyError:
            raise VocabLookupError(f"token {token!r} is not in the vocabulary") from None

    def encode(self, tokens: Sequence[str], add_bos_eos: bool = False) -> list:
        ids = [self.id_of(t) for t in tokens]
        if add_bos_eos:
            ids = [BOS] + ids + [EOS]
        return ids

    def decode(self, ids: Iterable[int], strip_specials: bool = True) -> list:
        out = []
        for i in ids:
            i = int(i)
            if strip_specials and i in (PAD, BOS, EOS):
                continue
            out.append(self.tokens[i])
        return out

    def to_lines(self) -> list:
        return [f"{tok}\t{i}" for i, tok in enumerate(self.tokens)]

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Vocabulary":
        entries = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                token, idx = line.rstrip("\n").split("\t")
                entries.append((int(idx), token))
            except ValueError:
                raise DataError(f"vocabulary line {lineno}: expected 'token<TAB>id', got {line!r}") from None
        entries.sort()
        if [i for i, _ in entries] != list(range(len(entries))):
            raise DataError("vocabulary ids must be contiguous from 0")
        return cls([tok for _, tok in entries])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fp:
            fp.write("\n".join(self.to_lines()) + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fp:
            return cls.from_lines(fp)


def build_vocab(corpus: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Build a frequency-sorted vocabulary over tokenised sentences.

    Ties in frequency are ordered lexicographically. Tokens seen fewer than
    `min_count` times are left out (and therefore map to UNK).

    Raises
    ------
    DataError
        If the corpus has no tokens.
    """
    counts = Counter()
    for sentence in corpus:
        counts.update(sentence.split() if isinstance(sentence, str) else sentence)
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    kept = [tok for tok, n in counts.items() if n >= min_count and tok not in RESERVED]
    kept.sort(key=lambda tok: (-counts[tok], tok))
    return Vocabulary(list(RESERVED) + kept)
