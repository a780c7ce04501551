from collections import Counter

import numpy as np
import pytest

from nmt_ablation.errors import ContractError, DataError
from nmt_ablation.subword import BpeModel, apply_bpe, learn_bpe, load_merges, restore_words, save_merges

MINI_CORPUS = ["low"] * 5 + ["lower"] * 2 + ["newest"] * 6 + ["widest"] * 3


def recount_oracle(words, num_merges):
    """Reference BPE that recounts every pair from scratch each round."""
    vocab = Counter()
    for w in words:
        vocab[tuple(w[:-1]) + (w[-1] + "</w>",)] += 1
    merges = []
    for _ in range(num_merges):
        pairs = Counter()
        for symbols, n in vocab.items():
            for pair in zip(symbols, symbols[1:]):
                pairs[pair] += n
        if not pairs:
            break
        best = min(pairs, key=lambda p: (-pairs[p], p))
        merges.append(best)
        merged = Counter()
        for symbols, n in vocab.items():
            out, i = [], 0
            while i < len(symbols):
                if i < len(symbols) - 1 and (symbols[i], symbols[i + 1]) == best:
                    out.append(symbols[i] + symbols[i + 1])
                    i += 2
                else:
                    out.append(symbols[i])
                    i += 1
            merged[tuple(out)] += n
        vocab = merged
    return merges


def random_sentence(rng, alphabet="abcdefgh", max_words=6):
    return " ".join(
        "".join(rng.choice(list(alphabet), size=int(rng.integers(1, 9))))
        for _ in range(int(rng.integers(1, max_words + 1)))
    )


def test_mini_corpus_matches_recount_oracle():
    model = learn_bpe([" ".join(MINI_CORPUS)], 10)
    assert list(model.merges) == recount_oracle(MINI_CORPUS, 10)
    assert model.num_merges == 10


def test_random_corpora_match_recount_oracle():
    rng = np.random.default_rng(0)
    for _ in range(5):
        corpus = [random_sentence(rng, "abc") for _ in range(20)]
        words = " ".join(corpus).split()
        assert list(learn_bpe(corpus, 30).merges) == recount_oracle(words, 30)


def test_zero_merges_splits_to_characters():
    model = learn_bpe(["hello world"], 0)
    assert apply_bpe(model, "hello") == ["h@@", "e@@", "l@@", "l@@", "o"]


def test_single_repeated_word_merges_aa_first():
    assert learn_bpe(["aaaa"], 1).merges[0] == ("a", "a")


def test_learn_bpe_rejects_bad_input():
    with pytest.raises(DataError):
        learn_bpe(["", "   "], 5)
    with pytest.raises(ContractError):
        learn_bpe(["abc"], -1)


def test_fully_merged_word_is_one_token():
    model = learn_bpe(["newest"] * 3, 100)
    assert apply_bpe(model, "newest") == ["newest"]


def test_unseen_characters_pass_through():
    model = learn_bpe(["abab"], 10)
    assert apply_bpe(model, "xyz") == ["x@@", "y@@", "z"]


def test_restore_words_examples():
    assert restore_words(["un@@", "related"]) == (["unrelated"], [(0, 1)])
    assert restore_words(["a", "b", "c"]) == (["a", "b", "c"], [(0, 0), (1, 1), (2, 2)])


def test_restore_words_tolerates_dangling_marker():
    assert restore_words(["a", "b@@"]) == (["a", "b"], [(0, 0), (1, 1)])


def test_apply_restore_round_trip():
    rng = np.random.default_rng(1)
    model = learn_bpe([random_sentence(rng) for _ in range(200)], 60)
    for _ in range(10_000):
        sentence = random_sentence(rng)
        words, spans = restore_words(apply_bpe(model, sentence))
        assert words == sentence.split()
        assert spans[-1][1] == len(apply_bpe(model, sentence)) - 1


def test_segmentation_is_context_free():
    model = learn_bpe(["lower lowest newer"], 8)
    sentence = apply_bpe(model, "newer lowest lower")
    assert sentence == apply_bpe(model, "newer") + apply_bpe(model, "lowest") + apply_bpe(model, "lower")


def test_merges_file_round_trip(tmp_path):
    model = learn_bpe(MINI_CORPUS, 10)
    path = tmp_path / "bpe.codes"
    save_merges(model, path)
    assert path.read_text().splitlines()[0].startswith("#version")
    assert load_merges(path) == model


def test_duplicate_merges_rejected():
    with pytest.raises(DataError):
        BpeModel(merges=(("a", "b"), ("a", "b")))
