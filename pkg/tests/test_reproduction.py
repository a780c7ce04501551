"""Desk-scale versions of the ablation experiments. Minutes each; run with `-m slow`."""
import pytest

from nmt_ablation.analysis import corpus_bleu
from nmt_ablation.data import build_vocab, copy_corpus, encode_corpus, make_batches, reversal_corpus
from nmt_ablation.inference import beam_search, greedy_decode
from nmt_ablation.model import ModelConfig, apply_variant, build_model
from nmt_ablation.tensor import no_grad
from nmt_ablation.training import TrainConfig, perplexity, sequence_nll, train


pytestmark = pytest.mark.slow

MODEL = dict(encoder_layers=2, decoder_layers=2, d_model=64, ff_dim=256, heads=4)
TRAINING = dict(lr=1e-3, token_budget=256, checkpoint_interval=100, plateau_patience=4, early_stop_patience=8)
DEV_SIZE = 50


def run(text, variant, seed, max_updates=1500):
    """Train one variant and return its best checkpoint and dev BLEU."""
    vocab = build_vocab([s for s, _ in text] + [t for _, t in text])
    pairs = encode_corpus(vocab, text)
    train_pairs, dev_pairs = pairs[:-DEV_SIZE], pairs[-DEV_SIZE:]
    config = ModelConfig(**apply_variant({**MODEL, "vocab_size": len(vocab)}, variant))
    result = train(
        build_model(config, seed=seed),
        vocab,
        train_pairs,
        dev_pairs,
        TrainConfig(max_updates=max_updates, seed=seed, **TRAINING),
    )
    model = result.best.build_model()
    hyps = [" ".join(vocab.decode(beam_search(model, p.source, beam=4, max_len=20).output)) for p in dev_pairs]
    refs = [" ".join(tgt) for _, tgt in text[-DEV_SIZE:]]
    return result.best, corpus_bleu(hyps, refs)


def test_copy_task_is_learned():
    text = copy_corpus(n=1500, vocab_size=12, seed=3)
    best, bleu = run(text, "transformer", seed=1)
    assert best.val_ppl < 1.5
    assert bleu > 80.0

    vocab, model = best.vocab, best.build_model()
    dev = encode_corpus(vocab, text[-DEV_SIZE:])
    exact = sum(greedy_decode(model, pair.source, max_len=12).output == pair.target[1:-1] for pair in dev)
    assert exact >= 40


def test_reversal_ordering_of_variants():
    variants = ("transformer", "trans-noenc", "rnns2s-noatt", "trans-noenc-nopos")
    wins = 0
    for seed in (1, 2, 3):
        text = reversal_corpus(n=500, vocab_size=50, seed=seed)
        bleu = {variant: run(text, variant, seed)[1] for variant in variants}
        ordered = bleu["transformer"] >= bleu["trans-noenc"] >= bleu["rnns2s-noatt"]
        positions_matter = bleu["trans-noenc"] - bleu["trans-noenc-nopos"] >= 20.0
        wins += ordered and positions_matter
    assert wins >= 2


def train_copy(variant, max_updates):
    """Train one variant on the copy task; returns the training result and the training pairs."""
    text = copy_corpus(n=800, vocab_size=12, seed=3)
    vocab = build_vocab([s for s, _ in text])
    pairs = encode_corpus(vocab, text)
    train_pairs, dev_pairs = pairs[:-DEV_SIZE], pairs[-DEV_SIZE:]
    config = ModelConfig(**apply_variant({**MODEL, "vocab_size": len(vocab)}, variant))
    result = train(
        build_model(config, seed=1), vocab, train_pairs, dev_pairs, TrainConfig(max_updates=max_updates, seed=1, **TRAINING)
    )
    return result, train_pairs


def test_rnn_learns_the_copy_task():
    result, train_pairs = train_copy("rnns2s", max_updates=3000)
    assert perplexity(result.best.build_model(), train_pairs) < 1.2


def test_decoder_only_transformer_learns_the_copy_task():
    result, train_pairs = train_copy("trans-noenc", max_updates=2000)
    assert perplexity(result.best.build_model(), train_pairs) < 1.1


def test_loss_on_a_fixed_batch_falls_during_the_first_updates():
    text = reversal_corpus(n=300, vocab_size=20, seed=4)
    vocab = build_vocab([s for s, _ in text] + [t for _, t in text])
    pairs = encode_corpus(vocab, text)
    batch = next(iter(make_batches(pairs, 256)))
    model = build_model(ModelConfig(**{**MODEL, "vocab_size": len(vocab)}), seed=2)

    def batch_loss():
        with no_grad():
            return sequence_nll(model, batch).item() / batch.token_count

    before = batch_loss()
    train(model, vocab, pairs, pairs[:DEV_SIZE], TrainConfig(max_updates=50, seed=2, **TRAINING))
    assert batch_loss() < before
