from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from dpgen.errors import ModelFormatError, NonFiniteGradient, ShapeMismatch
from dpgen.neural import (
    NONE,
    PAD,
    UNK,
    EmbeddingTable,
    dump_model,
    grad_check,
    init_uniform,
    parse_model,
    relu,
    relu_grad,
    sgd_step,
    sigmoid,
    softmax,
)


def test_softmax_examples():
    assert np.allclose(softmax([0.0, 0.0]), [0.5, 0.5])
    big = softmax([1000.0, 0.0])
    assert np.isfinite(big).all() and big[0] == pytest.approx(1.0) and big[1] < 1e-300


def test_softmax_against_extended_precision():
    getcontext().prec = 50
    ex = [Decimal(k).exp() for k in (1, 2, 3)]
    ref = [float(e / sum(ex)) for e in ex]
    assert softmax([1.0, 2.0, 3.0]) == pytest.approx(ref, rel=1e-15)


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-700, 700)))
def test_softmax_normalized_and_positive(z):
    y = softmax(z)
    assert abs(y.sum() - 1.0) < 1e-9
    assert (y >= 0).all()


def test_sigmoid_relu():
    assert sigmoid(0.0) == 0.5
    assert relu(-3.0) == 0.0 and relu(3.0) == 3.0
    s = sigmoid(np.array([-40.0, 40.0]))
    assert np.isfinite(s).all() and s[0] < 1e-17 and s[1] == pytest.approx(1.0)
    assert relu_grad(np.array([-1.0, 0.0, 2.0])).tolist() == [0.0, 0.0, 1.0]


def test_sgd_examples():
    p = {"w": np.array([1.0])}
    sgd_step(p, {"w": np.array([2.0])}, 0.1)
    assert p["w"][0] == pytest.approx(0.8)
    before = p["w"].copy()
    sgd_step(p, {"w": np.zeros(1)}, 0.1)
    assert (p["w"] == before).all()
    with pytest.raises(ShapeMismatch):
        sgd_step(p, {"w": np.zeros(2)}, 0.1)


def test_sgd_decreases_convex_quadratic():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 4))
    A = A @ A.T + np.eye(4)
    p = {"x": rng.normal(size=4)}
    loss = lambda: 0.5 * p["x"] @ A @ p["x"]  # noqa: E731
    lr = 1.0 / np.linalg.eigvalsh(A).max()
    prev = loss()
    for _ in range(50):
        sgd_step(p, {"x": A @ p["x"]}, lr)
        cur = loss()
        assert cur < prev
        prev = cur


def _mlp_232(params, x, target):
    """2-3-2 ReLU network with softmax cross-entropy."""
    z = params["W1"] @ x + params["b1"]
    a = relu(z)
    logits = params["W2"] @ a
    y = softmax(logits)
    loss = -np.log(y[target])
    d = y.copy()
    d[target] -= 1
    dz = (params["W2"].T @ d) * relu_grad(z)
    return loss, {"W1": np.outer(dz, x), "b1": dz, "W2": np.outer(d, a)}


def test_grad_check_tiny_mlp():
    rng = np.random.default_rng(0)
    params = {"W1": rng.normal(size=(3, 2)), "b1": rng.normal(size=3), "W2": rng.normal(size=(2, 3))}
    x = rng.normal(size=2)
    assert grad_check(lambda: _mlp_232(params, x, 1), params) < 1e-4


def test_grad_check_tiny_rnn():
    rng = np.random.default_rng(0)
    params = {"U": rng.normal(size=(3, 2)), "V": rng.normal(size=(3, 3)), "W": rng.normal(size=(2, 3))}
    xs = rng.normal(size=(4, 2))
    labels = [0, 1, 1, 0]

    def run():
        hs, ys, h = [], [], np.zeros(3)
        for x in xs:
            h = sigmoid(params["U"] @ x + params["V"] @ h)
            hs.append(h)
            ys.append(softmax(params["W"] @ h))
        loss = -sum(np.log(y[t]) for y, t in zip(ys, labels))
        g = {k: np.zeros_like(v) for k, v in params.items()}
        carry = np.zeros(3)
        for t in range(3, -1, -1):
            d = ys[t].copy()
            d[labels[t]] -= 1
            g["W"] += np.outer(d, hs[t])
            da = (params["W"].T @ d + carry) * hs[t] * (1 - hs[t])
            g["U"] += np.outer(da, xs[t])
            g["V"] += np.outer(da, hs[t - 1] if t else np.zeros(3))
            carry = params["V"].T @ da
        return loss, g

    assert grad_check(run, params) < 1e-4


def test_relu_kink_convention():
    # at all-zero parameters every pre-activation sits on the kink
    params = {"W1": np.zeros((3, 2)), "b1": np.zeros(3), "W2": np.zeros((2, 3))}
    _, g = _mlp_232(params, np.array([1.0, -1.0]), 0)
    assert not g["W1"].any() and not g["b1"].any()


def test_grad_check_rejects_non_finite():
    params = {"w": np.array([1.0])}
    with pytest.raises(NonFiniteGradient):
        grad_check(lambda: (0.0, {"w": np.array([np.nan])}), params)


def test_grad_check_flags_wrong_gradient():
    params = {"w": np.array([1.0, 2.0])}
    assert grad_check(lambda: (float(params["w"] @ params["w"]), {"w": params["w"].copy()}), params) > 0.1


def test_seeded_init_is_reproducible():
    a = init_uniform(np.random.default_rng(7), (5, 4))
    b = init_uniform(np.random.default_rng(7), (5, 4))
    assert (a == b).all() and np.abs(a).max() <= 0.1


def test_embedding_table_round_trip():
    emb = EmbeddingTable.build(["我", "你"], 3, np.random.default_rng(0), extra=(PAD,))
    assert emb.vocab[:3] == [UNK, NONE, PAD]
    assert emb.id(None) == emb.index[NONE] and emb.id("zzz") == emb.index[UNK]
    text = emb.dumps()
    assert text.startswith("5 3\n")
    assert EmbeddingTable.loads(text).dumps() == text


def test_embedding_file_without_sentinels_gets_them():
    emb = EmbeddingTable.loads("2 2\n我 0.5 1\n你 -1 2\n")
    assert UNK in emb.index and NONE in emb.index
    assert emb.lookup("我").tolist() == [0.5, 1.0]
    with pytest.raises(ModelFormatError):
        EmbeddingTable.loads("2 2\n我 0.5\n")


def test_model_file_round_trip():
    rng = np.random.default_rng(3)
    text = dump_model("toy", {"a": 1}, {"words": ["x", "y"]},
                      {"M": rng.normal(size=(2, 3)), "v": rng.normal(size=4)})
    mf = parse_model(text, "toy")
    assert mf.meta == {"a": "1"} and mf.vocabs == {"words": ["x", "y"]}
    assert dump_model(mf.kind, mf.meta, mf.vocabs, mf.arrays) == text
    with pytest.raises(ModelFormatError):
        parse_model(text, "other")
