import numpy as np
import pytest

from nmt_ablation.data import EOS, build_vocab, encode_corpus, reversal_corpus
from nmt_ablation.model import ModelConfig, SourceState, build_model
from nmt_ablation.tensor import Tensor


def tiny_config(**overrides) -> ModelConfig:
    values = dict(
        family="transformer",
        vocab_size=12,
        encoder_layers=1,
        decoder_layers=2,
        d_model=8,
        ff_dim=16,
        heads=2,
    )
    values.update(overrides)
    return ModelConfig(**values)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def transformer():
    return build_model(tiny_config(), seed=3)


@pytest.fixture
def toy_text():
    return reversal_corpus(n=40, vocab_size=6, min_len=2, max_len=4, seed=5)


@pytest.fixture
def toy_vocab(toy_text):
    return build_vocab([s for s, _ in toy_text] + [t for _, t in toy_text])


@pytest.fixture
def toy_pairs(toy_vocab, toy_text):
    return encode_corpus(toy_vocab, toy_text)


class ScriptedModel:
    """Stands in for a model in decoding tests: next-token log-probabilities come from a function of the prefix."""

    def __init__(self, vocab_size, table):
        self.vocab_size = vocab_size
        self.table = table
        self.calls = 0

    def check_ids(self, ids):
        pass

    def encode(self, src_ids, training=False, rng=None):
        src_ids = np.asarray(src_ids)
        return SourceState(memory=Tensor(np.zeros(src_ids.shape + (2,))), mask=src_ids != 0)

    def step_log_probs(self, state, prefixes):
        self.calls += 1
        return np.stack([self.table(tuple(int(t) for t in p[1:])) for p in prefixes])


@pytest.fixture
def scripted_model():
    """Five ids (PAD, BOS, EOS and two words) with random but fixed distributions per prefix."""
    cache = {}

    def table(prefix):
        if prefix not in cache:
            seed = abs(hash(prefix)) % (2**32)
            logits = np.random.default_rng(seed).normal(size=5) * 2.0
            logits[:2] = -np.inf
            cache[prefix] = logits - np.logaddexp.reduce(logits[2:])
        return cache[prefix]

    return ScriptedModel(5, table)


