import math

import numpy as np
import pytest

from nmt_ablation.data import BOS, EOS, PAD, RESERVED, ParallelPair, Vocabulary, make_batches
from nmt_ablation.errors import ConfigError, ContractError, DataError
from nmt_ablation.model import (
    EMBEDDINGS_ONLY,
    EMBEDDINGS_PLUS_POSITIONS,
    ENCODER_OUTPUT,
    VARIANTS,
    AttentionRecorder,
    Checkpoint,
    ModelConfig,
    MultiHeadAttention,
    ParameterStore,
    apply_variant,
    build_model,
    parameter_breakdown,
    sinusoid_positions,
    transformer_encoder_layer_params,
)
from nmt_ablation.tensor import Tensor, backward, no_grad
from nmt_ablation.training import sequence_nll

from .conftest import tiny_config


def variant_config(variant, **overrides):
    base = tiny_config(**overrides).dict()
    return ModelConfig(**apply_variant(base, variant))


def vocab_of(size):
    return Vocabulary(list(RESERVED) + [f"w{i}" for i in range(size - len(RESERVED))])


# positions


def test_sinusoid_positions_values():
    pe = sinusoid_positions(5, 8).data
    np.testing.assert_array_equal(pe[0, 0::2], 0.0)
    np.testing.assert_array_equal(pe[0, 1::2], 1.0)
    assert pe[1, 0] == pytest.approx(math.sin(1.0), abs=1e-9)
    assert pe[3, 2] == pytest.approx(math.sin(3 / 10000 ** (2 / 8)), abs=1e-12)
    assert np.all(np.abs(pe) <= 1.0)


def test_sinusoid_positions_need_even_dimension():
    with pytest.raises(ConfigError):
        sinusoid_positions(3, 7)


# configuration


def test_transformer_needs_attention():
    with pytest.raises(ConfigError):
        ModelConfig.from_mapping({"vocab_size": 10, "use_attention": False})


def test_heads_must_divide_d_model():
    with pytest.raises(ConfigError):
        ModelConfig.from_mapping({"vocab_size": 10, "d_model": 10, "heads": 4})


def test_encoder_free_is_legal_for_both_families():
    for family in ("transformer", "rnn"):
        assert ModelConfig(vocab_size=10, family=family, encoder_layers=0).encoder_layers == 0


def test_config_lines_round_trip():
    config = variant_config("rnns2s-noatt-noenc", tie_embeddings=False)
    assert ModelConfig.from_lines(config.to_lines()) == config
    assert "use_attention=false" in config.to_lines()


def test_config_lines_reject_unknown_key():
    with pytest.raises(ConfigError, match="colour"):
        ModelConfig.from_lines(["vocab_size=10", "colour=red"])


def test_unknown_variant():
    with pytest.raises(ConfigError):
        apply_variant({}, "trans-nothing")


# attention


def test_single_source_position_gets_all_attention(rng):
    mha = MultiHeadAttention(ParameterStore(rng), "att", 8, 2)
    recorder = AttentionRecorder()
    mha(Tensor(rng.normal(size=(1, 3, 8))), *[Tensor(rng.normal(size=(1, 1, 8)))] * 2, recorder=recorder)
    np.testing.assert_array_equal(recorder.layers[0], 1.0)


def test_identical_keys_give_uniform_attention(rng):
    mha = MultiHeadAttention(ParameterStore(rng), "att", 8, 4)
    keys = Tensor(np.repeat(rng.normal(size=(1, 1, 8)), 5, axis=1))
    recorder = AttentionRecorder()
    mha(Tensor(rng.normal(size=(1, 2, 8))), keys, keys, recorder=recorder)
    np.testing.assert_allclose(recorder.layers[0], 1 / 5, atol=1e-9)


def test_single_head_matches_loop_oracle(rng):
    d = 6
    mha = MultiHeadAttention(ParameterStore(rng), "att", d, 1)
    x, m = rng.normal(size=(4, d)), rng.normal(size=(3, d))
    out = mha(Tensor(x[None]), Tensor(m[None]), Tensor(m[None])).data[0]

    def proj(layer, v):
        return v @ layer.weight.data + layer.bias.data

    q = [proj(mha.query, row) for row in x]
    k = [proj(mha.key, row) for row in m]
    v = [proj(mha.value, row) for row in m]
    expected = []
    for t in range(4):
        scores = [sum(q[t][j] * k[s][j] for j in range(d)) / math.sqrt(d) for s in range(3)]
        top = max(scores)
        weights = [math.exp(sc - top) for sc in scores]
        total = sum(weights)
        context = [sum(weights[s] / total * v[s][j] for s in range(3)) for j in range(d)]
        expected.append(proj(mha.output, np.array(context)))
    np.testing.assert_allclose(out, np.array(expected), rtol=0, atol=1e-10)


# source representation


def test_encoder_free_representation_is_embedding_plus_position():
    model = build_model(tiny_config(encoder_layers=0), seed=1)
    src = [4, 7, 7, 5]
    rep = model.source_representation(src)
    assert rep.provenance == EMBEDDINGS_PLUS_POSITIONS
    embed = model.params["embed.weight"].data
    pe = sinusoid_positions(4, 8).data
    for r, token in enumerate(src):
        np.testing.assert_allclose(rep.matrix[r], math.sqrt(8) * embed[token] + pe[r], rtol=0, atol=1e-12)


def test_no_position_representation_is_position_independent():
    model = build_model(tiny_config(encoder_layers=0, use_source_positions=False), seed=1)
    first = model.source_representation([6, 4, 6, 9])
    second = model.source_representation([5, 5, 5, 6])
    assert first.provenance == EMBEDDINGS_ONLY
    np.testing.assert_array_equal(first.matrix[0], first.matrix[2])
    np.testing.assert_array_equal(first.matrix[0], second.matrix[3])


def test_encoder_free_rows_repeat_across_sentences():
    model = build_model(tiny_config(encoder_layers=0), seed=1)
    a = model.source_representation([4, 8, 9])
    b = model.source_representation([4, 10])
    np.testing.assert_array_equal(a.matrix[0], b.matrix[0])


@pytest.mark.parametrize("family", ["transformer", "rnn"])
def test_encoder_output_is_contextual(family):
    model = build_model(tiny_config(family=family, encoder_layers=1), seed=1)
    a = model.source_representation([4, 8, 9])
    b = model.source_representation([4, 10, 11])
    assert a.provenance == ENCODER_OUTPUT
    if family == "transformer":
        assert not np.allclose(a.matrix[0], b.matrix[0])
    else:
        # a unidirectional encoder only sees the left context
        assert not np.allclose(a.matrix[1], b.matrix[1])


def test_out_of_range_ids_are_rejected(transformer):
    with pytest.raises(ContractError):
        transformer.source_representation([4, 12])
    with pytest.raises(ContractError):
        transformer.forward(np.array([[4, 5]]), np.array([[BOS, -1]]))


def test_all_pad_source_is_rejected(transformer):
    with pytest.raises(DataError):
        transformer.forward(np.array([[PAD, PAD]]), np.array([[BOS]]))


# transformer


@pytest.mark.parametrize("encoder_layers", [0, 2])
def test_decoder_is_causal(encoder_layers):
    model = build_model(tiny_config(encoder_layers=encoder_layers), seed=2)
    src = np.array([[4, 5, 6]])
    tgt = np.array([[BOS, 7, 8, 9, 10]])
    with no_grad():
        base = model.forward(src, tgt).data
        for t in range(1, 5):
            changed = tgt.copy()
            changed[0, t] = 11
            logits = model.forward(src, changed).data
            np.testing.assert_array_equal(logits[0, :t], base[0, :t])


def test_tied_output_projection_shares_storage(transformer):
    assert transformer.embed.output_weight is transformer.params["embed.weight"]
    transformer.params["embed.weight"].data[5, 0] = 123.0
    assert transformer.embed.output_weight.data[5, 0] == 123.0
    assert "output.weight" not in transformer.params


def test_untied_model_has_three_matrices():
    model = build_model(tiny_config(tie_embeddings=False), seed=0)
    names = {"embed.source.weight", "embed.target.weight", "output.weight"}
    assert names <= set(model.params)


@pytest.mark.parametrize("variant", sorted(VARIANTS))
@pytest.mark.parametrize("tie", [True, False])
def test_analytic_count_matches_allocation(variant, tie):
    config = variant_config(variant, tie_embeddings=tie, encoder_layers=2)
    model = build_model(config, seed=0)
    assert model.parameter_groups() == parameter_breakdown(config)
    assert model.num_parameters() == sum(parameter_breakdown(config).values())


def test_encoder_layer_delta_at_full_size():
    delta = transformer_encoder_layer_params(768, 2048)
    assert delta == 5_513_984
    assert abs(delta - 5.5e6) / 5.5e6 < 0.01

    values = dict(vocab_size=8, d_model=768, ff_dim=2048, heads=8, decoder_layers=1)
    without = build_model(ModelConfig(encoder_layers=0, **values), seed=0).num_parameters()
    with_one = build_model(ModelConfig(encoder_layers=1, **values), seed=0).num_parameters()
    assert with_one - without == delta


# rnn


@pytest.mark.parametrize("variant", ["rnns2s-noatt", "rnns2s-noatt-noenc"])
def test_attention_free_rnn_records_nothing(variant):
    model = build_model(variant_config(variant), seed=0)
    recorder = AttentionRecorder()
    with no_grad():
        model.forward(np.array([[4, 5]]), np.array([[BOS, 6, 7]]), recorder=recorder)
    record = recorder.sentence(0, 3, 2)
    assert record.is_empty
    assert record.shape == (0, 0, 3, 2)


def test_encoder_free_rnn_single_source_token_gets_all_attention():
    model = build_model(variant_config("rnns2s-noenc"), seed=0)
    recorder = AttentionRecorder()
    with no_grad():
        model.forward(np.array([[6]]), np.array([[BOS, 4, 5, 7]]), recorder=recorder)
    record = recorder.sentence(0, 4, 1)
    assert record.shape == (1, 1, 4, 1)
    np.testing.assert_array_equal(record.weights, 1.0)


def test_rnn_attention_rows_sum_to_one():
    model = build_model(variant_config("rnns2s"), seed=0)
    recorder = AttentionRecorder()
    with no_grad():
        model.forward(np.array([[4, 5, 6, PAD], [7, 8, 9, 10]]), np.array([[BOS, 4, 5], [BOS, 6, 7]]), recorder=recorder)
    record = recorder.sentence(0, 3, 3)
    assert record.row_sum_error() < 1e-6
    np.testing.assert_array_equal(recorder.layers[0][0, :, :, 3], 0.0)


# gradients through whole models


@pytest.mark.parametrize("variant", ["transformer", "trans-noenc", "rnns2s", "rnns2s-noatt-noenc"])
def test_model_gradients_match_finite_differences(variant):
    config = variant_config(variant, d_model=4, ff_dim=6, heads=2, encoder_layers=1, decoder_layers=1)
    model = build_model(config, seed=4)
    pairs = [ParallelPair((4, 5, 6), (BOS, 9, 10, EOS)), ParallelPair((7, 8), (BOS, 11, EOS))]
    (batch,) = make_batches(pairs, 100)
    assert batch.source.shape == (2, 3)

    loss = sequence_nll(model, batch)
    backward(loss)
    rng = np.random.default_rng(0)
    h = 1e-5
    for name in sorted(model.params)[::3]:
        p = model.params[name]
        idx = tuple(int(rng.integers(0, n)) for n in p.shape)
        original = p.data[idx]
        with no_grad():
            p.data[idx] = original + h
            plus = sequence_nll(model, batch).item()
            p.data[idx] = original - h
            minus = sequence_nll(model, batch).item()
        p.data[idx] = original
        numeric = (plus - minus) / (2 * h)
        grad = 0.0 if p.grad is None else p.grad[idx]
        assert grad == pytest.approx(numeric, rel=1e-4, abs=1e-7), name


# checkpoints


def test_checkpoint_round_trip(tmp_path):
    config = tiny_config(encoder_layers=0)
    model = build_model(config, seed=5)
    model.freeze(["embed.weight"])
    ckpt = Checkpoint.from_model(model, vocab_of(12), index=3, updates=150, val_ppl=4.25, seed=5)
    ckpt.save(tmp_path / "m.ckpt")

    loaded = Checkpoint.load(tmp_path / "m.ckpt")
    assert loaded.config == config
    assert loaded.vocab == ckpt.vocab
    assert (loaded.index, loaded.updates, loaded.val_ppl) == (3, 150, 4.25)
    assert loaded.frozen == frozenset({"embed.weight"})
    for name, value in ckpt.params.items():
        np.testing.assert_array_equal(loaded.params[name], value)

    rebuilt = loaded.build_model()
    assert not rebuilt.params["embed.weight"].requires_grad
    src, tgt = np.array([[4, 5]]), np.array([[BOS, 6]])
    with no_grad():
        np.testing.assert_array_equal(rebuilt.forward(src, tgt).data, model.forward(src, tgt).data)


def test_checkpoint_vocab_must_match_model(transformer):
    with pytest.raises(ConfigError):
        Checkpoint.from_model(transformer, vocab_of(9))


def test_load_state_dict_rejects_mismatch(transformer):
    state = transformer.state_dict()
    state.pop("output.bias")
    with pytest.raises(ContractError, match="output.bias"):
        transformer.load_state_dict(state)


def test_step_log_probs_never_predict_pad_or_bos(transformer):
    state = transformer.encode(np.array([[4, 5]]))
    logp = transformer.step_log_probs(state, np.array([[BOS, 6]]))
    assert logp.shape == (1, 12)
    assert logp[0, PAD] == -np.inf and logp[0, BOS] == -np.inf
    assert np.isfinite(logp[0, EOS])
