import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from nmt_ablation.errors import ContractError, DataError, DimensionError, ParameterError
from nmt_ablation.tensor import (
    AdamState,
    Tensor,
    adam_update,
    backward,
    clip_grad_norm,
    concat,
    dropout,
    embedding,
    exp,
    layer_norm,
    log,
    log_softmax,
    matmul,
    no_grad,
    pick,
    read_archive,
    relu,
    sigmoid,
    softmax,
    stack,
    tanh,
    where,
    write_archive,
)

SEEDS = range(10)
H = 1e-5


def numeric_grad(fn, arrays, which):
    base = [a.copy() for a in arrays]
    grad = np.zeros_like(base[which])
    it = np.nditer(base[which], flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        plus = [a.copy() for a in base]
        minus = [a.copy() for a in base]
        plus[which][idx] += H
        minus[which][idx] -= H
        with no_grad():
            f_plus = fn(*[Tensor(a) for a in plus]).item()
            f_minus = fn(*[Tensor(a) for a in minus]).item()
        grad[idx] = (f_plus - f_minus) / (2 * H)
    return grad


def check_gradients(fn, *arrays):
    """Compare analytic gradients of scalar fn against central differences."""
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    backward(fn(*tensors))
    for i, t in enumerate(tensors):
        np.testing.assert_allclose(t.grad, numeric_grad(fn, arrays, i), rtol=1e-4, atol=1e-7)


def weighted(out, seed=99):
    """Reduce to a scalar with fixed random weights so every output entry matters."""
    w = np.random.default_rng(seed).normal(size=out.shape)
    return (out * w).sum()


# forward behaviour


def test_matmul_identity_and_zeros():
    a = np.random.default_rng(0).normal(size=(2, 2))
    np.testing.assert_array_equal(matmul(Tensor(np.eye(2)), Tensor(a)).data, a)
    b = np.random.default_rng(1).normal(size=(3, 4))
    np.testing.assert_array_equal(matmul(Tensor(np.zeros((2, 3))), Tensor(b)).data, np.zeros((2, 4)))


def test_matmul_matches_loop_oracle():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 2))
    expected = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(3):
                expected[i, j] += a[i, k] * b[k, j]
    np.testing.assert_allclose((Tensor(a) @ Tensor(b)).data, expected, rtol=0, atol=1e-12)


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_softmax_known_values():
    np.testing.assert_allclose(softmax(Tensor([0.0, 0.0, 0.0])).data, [1 / 3] * 3, atol=1e-15)
    np.testing.assert_allclose(softmax(Tensor([0.0, math.log(2)])).data, [1 / 3, 2 / 3], atol=1e-15)


def test_softmax_large_inputs_match_high_precision_oracle():
    getcontext().prec = 50
    xs = [Decimal(1000), Decimal(1000), Decimal(999)]
    exps = [x.exp() for x in xs]
    expected = [float(e / sum(exps)) for e in exps]
    out = softmax(Tensor([1000.0, 1000.0, 999.0])).data
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-9)


@pytest.mark.parametrize("seed", SEEDS)
def test_softmax_rows_are_distributions(seed):
    x = np.random.default_rng(seed).normal(scale=10, size=(4, 7))
    out = softmax(Tensor(x), axis=-1).data
    assert np.all(out > 0)
    np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-9)


def test_softmax_mask_zeroes_entries():
    mask = np.array([True, False, True])
    out = softmax(Tensor([1.0, 5.0, 1.0]), mask=mask).data
    np.testing.assert_allclose(out, [0.5, 0.0, 0.5])


def test_layer_norm_known_values():
    one, zero = Tensor(np.ones(4)), Tensor(np.zeros(4))
    np.testing.assert_allclose(layer_norm(Tensor(np.full(4, 3.0)), one, zero).data, np.zeros(4))
    out = layer_norm(Tensor([1.0, -1.0]), Tensor(np.ones(2)), Tensor(np.zeros(2))).data
    np.testing.assert_allclose(out, [1.0, -1.0], atol=1e-5)


def test_layer_norm_statistics():
    x = np.random.default_rng(4).normal(loc=3, scale=5, size=64)
    out = layer_norm(Tensor(x), Tensor(np.ones(64)), Tensor(np.zeros(64))).data
    assert abs(out.mean()) < 1e-9
    assert abs(out.var() - 1.0) < 1e-6


def test_layer_norm_rejects_single_feature():
    with pytest.raises(DimensionError):
        layer_norm(Tensor(np.ones((3, 1))), Tensor(np.ones(1)), Tensor(np.zeros(1)))


def test_dropout_identity_cases(rng):
    x = Tensor(np.arange(6.0))
    assert dropout(x, 0.0, True, rng) is x
    assert dropout(x, 0.1, False, rng) is x


def test_dropout_preserves_expectation(rng):
    out = dropout(Tensor(np.ones(100_000)), 0.5, True, rng).data
    assert abs(out.mean() - 1.0) < 0.01
    assert set(np.unique(out)) <= {0.0, 2.0}


@pytest.mark.parametrize("rate", [1.0, 1.5, -0.1])
def test_dropout_rejects_bad_rate(rng, rate):
    with pytest.raises(ParameterError):
        dropout(Tensor(np.ones(3)), rate, True, rng)


# backward


def test_backward_simple_cases():
    x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    backward(x.sum())
    np.testing.assert_array_equal(x.grad, np.ones(3))

    x = Tensor([1.0, 2.0], requires_grad=True)
    backward((x * x).sum())
    np.testing.assert_array_equal(x.grad, [2.0, 4.0])


def test_backward_accumulates():
    x = Tensor([1.0, 2.0], requires_grad=True)
    backward((x * 3.0).sum())
    backward((x * 3.0).sum())
    np.testing.assert_array_equal(x.grad, [6.0, 6.0])


def test_backward_rejects_non_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ContractError):
        backward(x * 2.0)


def test_no_grad_records_nothing():
    x = Tensor([1.0], requires_grad=True)
    with no_grad():
        y = x * 2.0
    assert not y.requires_grad


def test_shared_subexpression_gradient():
    x = Tensor([0.5, -1.5], requires_grad=True)
    y = tanh(x)
    backward((y * y + y).sum())
    t = np.tanh(x.data)
    np.testing.assert_allclose(x.grad, (2 * t + 1) * (1 - t**2))


# finite differences over every differentiable op


@pytest.mark.parametrize("seed", SEEDS)
def test_elementwise_gradients(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4,))
    positive = rng.uniform(0.5, 2.0, size=(3, 4))
    check_gradients(lambda x, y: weighted(x + y), a, b)
    check_gradients(lambda x, y: weighted(x - y), a, b)
    check_gradients(lambda x, y: weighted(x * y), a, b)
    check_gradients(lambda x, y: weighted(x / y), a, positive)
    check_gradients(lambda x: weighted(exp(x)), a)
    check_gradients(lambda x: weighted(log(x)), positive)
    check_gradients(lambda x: weighted(tanh(x)), a)
    check_gradients(lambda x: weighted(sigmoid(x)), a)
    check_gradients(lambda x: weighted(relu(x)), a + np.sign(a) * 0.01)


@pytest.mark.parametrize("seed", SEEDS)
def test_structural_gradients(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(2, 3, 4)), rng.normal(size=(2, 4, 5))
    check_gradients(lambda x, y: weighted(x @ y), a, b)
    check_gradients(lambda x, y: weighted(x @ y), a, rng.normal(size=(4, 5)))
    check_gradients(lambda x: weighted(x.sum(axis=1)), a)
    check_gradients(lambda x: weighted(x.mean(axis=-1, keepdims=True)), a)
    check_gradients(lambda x: weighted(x.reshape(6, 4)), a)
    check_gradients(lambda x: weighted(x.transpose(2, 0, 1)), a)
    check_gradients(lambda x: weighted(x[:, 1:, ::2]), a)
    check_gradients(lambda x: weighted(x[np.array([0, 0, 1])]), a)
    check_gradients(lambda x, y: weighted(concat([x, y], axis=-1)), a, rng.normal(size=(2, 3, 2)))
    check_gradients(lambda x, y: weighted(stack([x, y], axis=1)), a, rng.normal(size=(2, 3, 4)))


@pytest.mark.parametrize("seed", SEEDS)
def test_network_op_gradients(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, 3, 5))
    mask = rng.random((2, 3, 5)) > 0.3
    mask[..., 0] = True
    ids = rng.integers(0, 5, size=(2, 3))
    check_gradients(lambda t: weighted(softmax(t, axis=-1)), x)
    check_gradients(lambda t: weighted(softmax(t, axis=-1, mask=mask)), x)
    check_gradients(lambda t: weighted(log_softmax(t, axis=-1)), x)
    check_gradients(
        lambda t, g, b: weighted(layer_norm(t, g, b)), x, rng.normal(size=5), rng.normal(size=5)
    )
    check_gradients(lambda w: weighted(embedding(w, ids)), rng.normal(size=(5, 4)))
    check_gradients(lambda t: weighted(pick(t, ids)), x)
    check_gradients(lambda t, u: weighted(where(mask, t, u)), x, rng.normal(size=(5,)))
    check_gradients(
        lambda t: weighted(dropout(t, 0.3, True, np.random.default_rng(seed))), x
    )


# optimiser


def test_adam_zero_gradient_leaves_parameter():
    p = Tensor([1.0, -2.0], requires_grad=True)
    p.grad = np.zeros(2)
    adam_update({"p": p}, AdamState())
    np.testing.assert_array_equal(p.data, [1.0, -2.0])


def test_adam_first_step_closed_form():
    g = np.array([0.3, -4.0, 1e-3])
    p = Tensor(np.zeros(3), requires_grad=True)
    p.grad = g.copy()
    state = AdamState()
    adam_update({"p": p}, state)
    # m_hat = g, v_hat = g^2 after bias correction
    expected = -state.lr * g / (np.abs(g) + state.epsilon)
    np.testing.assert_allclose(p.data, expected, rtol=0, atol=1e-9)
    assert state.step == 1
    assert state.m["p"].shape == state.v["p"].shape == p.shape


def test_adam_monotone_decrease_on_quadratic():
    p = Tensor([5.0], requires_grad=True)
    state = AdamState(lr=0.01)
    losses = []
    for _ in range(100):
        p.grad = None
        loss = (p * p).sum()
        losses.append(loss.item())
        backward(loss)
        adam_update({"p": p}, state)
    assert all(b < a for a, b in zip(losses, losses[1:]))
    assert state.step == 100


def test_adam_missing_gradient_names_parameter():
    with pytest.raises(ContractError, match="decoder.0.bias"):
        adam_update({"decoder.0.bias": Tensor([1.0], requires_grad=True)}, AdamState())


def test_adam_skips_frozen_parameters():
    frozen = Tensor([1.0], requires_grad=False)
    live = Tensor([1.0], requires_grad=True)
    live.grad = np.array([1.0])
    adam_update({"frozen": frozen, "live": live}, AdamState())
    assert frozen.data[0] == 1.0
    assert live.data[0] < 1.0


def test_clip_grad_norm():
    p = Tensor(np.zeros(2), requires_grad=True)
    p.grad = np.array([3.0, 4.0])
    assert clip_grad_norm({"p": p}, 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose(p.grad, [0.6, 0.8])


# archive


def test_archive_round_trip(tmp_path):
    arrays = {"a": np.arange(6.0).reshape(2, 3), "b": np.array([np.pi]), "c": np.ones((2, 1, 2))}
    path = tmp_path / "x.ckpt"
    write_archive(path, {"notes": ["hello", "[x]"]}, arrays)
    sections, loaded = read_archive(path)
    assert sections == {"notes": ["hello", "[x]"]}
    assert list(loaded) == ["a", "b", "c"]
    for name, value in arrays.items():
        np.testing.assert_array_equal(loaded[name], value)


def test_archive_payload_is_little_endian_float64(tmp_path):
    path = tmp_path / "x.ckpt"
    write_archive(path, {}, {"w": np.array([1.5, -2.0])})
    raw = path.read_bytes()
    payload = raw[raw.index(b"\n[payload]\n") + len(b"\n[payload]\n") :]
    np.testing.assert_array_equal(np.frombuffer(payload, dtype="<f8"), [1.5, -2.0])
    assert b"w\t2\t0" in raw


def test_archive_rejects_foreign_files(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"something else\n[payload]\n")
    with pytest.raises(DataError):
        read_archive(path)
