import numpy as np
import pytest

from esp.nn import (
    Adam,
    Dense,
    DimensionMismatch,
    Tensor,
    bce,
    cosine_loss,
    dropout,
    softmax,
    tape,
    topic_cross_entropy,
)
from esp.nn.gradcheck import finite_difference_check


def _identity_layer(dim):
    layer = Dense(dim, dim, activation="identity")
    layer.weights.data = np.eye(dim)
    layer.bias.data = np.zeros(dim)
    return layer


def test_forward_identity():
    layer = _identity_layer(3)
    x = np.array([1.5, -2.0, 0.25])
    assert np.array_equal(layer(x).data, x)


def test_forward_zero_weights_relu():
    layer = Dense(3, 2, activation="relu")
    layer.weights.data = np.zeros((2, 3))
    layer.bias.data = np.zeros(2)
    assert np.array_equal(layer(np.ones(3)).data, np.zeros(2))


def test_forward_hand_case():
    layer = Dense(2, 2, activation="relu")
    layer.weights.data = np.array([[1.0, 2.0], [3.0, 4.0]])
    layer.bias.data = np.zeros(2)
    assert np.array_equal(layer(np.array([1.0, 1.0])).data, [3.0, 7.0])


def test_forward_batched_matches_single():
    rng = np.random.default_rng(0)
    layer = Dense(4, 3, activation="relu", rng=rng)
    xs = rng.normal(size=(5, 4))
    batched = layer(xs).data
    for i in range(5):
        assert np.allclose(batched[i], layer(xs[i]).data)


def test_dimension_mismatch():
    layer = Dense(4, 3)
    with pytest.raises(DimensionMismatch):
        layer(np.ones(5))


def test_backward_linear_squared_loss():
    # loss = sum((Wx - y)^2) has gradient 2 (Wx - y) x^T
    rng = np.random.default_rng(1)
    layer = Dense(3, 2, activation="identity", rng=rng)
    x = rng.normal(size=3)
    y = rng.normal(size=2)
    out = layer(x)
    diff = out - Tensor(y)
    loss = tape.tsum(diff * diff)
    loss.backward()
    residual = layer.weights.data @ x - y
    expected = 2.0 * np.outer(residual, x)
    assert np.allclose(layer.weights.grad, expected, atol=1e-12)
    assert np.allclose(layer.bias.grad, 2.0 * residual, atol=1e-12)


def test_backward_constant_loss_zero_grads():
    layer = Dense(3, 2, rng=np.random.default_rng(2))
    loss = tape.tsum(layer(np.ones(3)) * 0.0)
    loss.backward()
    assert np.all(layer.weights.grad == 0.0)


def test_backward_relu_dead_unit():
    layer = Dense(1, 1, activation="relu")
    layer.weights.data = np.array([[1.0]])
    layer.bias.data = np.array([-5.0])  # preactivation negative
    loss = tape.tsum(layer(np.array([1.0])))
    loss.backward()
    assert layer.weights.grad[0, 0] == 0.0


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(3)
    l1 = Dense(4, 5, activation="relu", rng=rng)
    l2 = Dense(5, 3, activation="sigmoid", rng=rng)
    x = rng.normal(size=4) + 0.3
    y = rng.normal(size=3)

    def loss_fn():
        return cosine_loss(l2(l1(x)), y)

    params = {**l1.parameters("l1"), **l2.parameters("l2")}
    worst = finite_difference_check(loss_fn, params)
    assert worst < 1e-4


def test_adam_zero_gradient_only_weight_decay():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    opt = Adam({"p": p}, lr=0.1, weight_decay=0.0)
    p.grad = np.zeros(2)
    before = p.data.copy()
    opt.step()
    assert np.array_equal(p.data, before)
    opt_wd = Adam({"p": p}, lr=0.1, weight_decay=0.01)
    p.grad = np.zeros(2)
    opt_wd.step()
    assert np.allclose(p.data, before * (1 - 0.1 * 0.01), rtol=1e-6)


def test_adam_first_step_bias_corrected():
    p = Tensor(np.array([0.0]), requires_grad=True)
    opt = Adam({"p": p}, lr=0.1)
    p.grad = np.array([1.0])
    opt.step()
    # m_hat = 1, v_hat = 1 -> step of lr/(1+eps)
    assert p.data[0] == pytest.approx(-0.1, rel=1e-6)


def test_adam_deterministic_replay():
    def run():
        rng = np.random.default_rng(7)
        p = Tensor(rng.normal(size=4), requires_grad=True)
        opt = Adam({"p": p}, lr=0.01)
        for _ in range(5):
            p.grad = p.data * 0.5 + 1.0
            opt.step()
        return p.data.copy()

    assert np.array_equal(run(), run())


def test_bce_values():
    gamma = 0.7
    assert float(bce(Tensor(1.0), 1.0, gamma).data) == pytest.approx(0.0, abs=1e-6)
    assert float(bce(Tensor(0.5), 1.0, gamma).data) == pytest.approx(gamma * np.log(2))
    assert float(bce(Tensor(0.9), 0.0, 0.0).data) == 0.0


def test_dropout():
    rng = np.random.default_rng(5)
    x = Tensor(np.ones(100))
    assert dropout(x, 0.0, rng) is x
    draws = np.concatenate(
        [dropout(Tensor(np.ones(100)), 0.3, rng).data == 0.0 for _ in range(100)]
    )
    assert draws.mean() == pytest.approx(0.3, abs=0.02)


def test_softmax():
    out = softmax(Tensor(np.zeros(7)))
    assert np.allclose(out.data, np.full(7, 1 / 7))
    rng = np.random.default_rng(6)
    for _ in range(10):
        out = softmax(Tensor(rng.normal(size=9) * 10))
        assert abs(out.data.sum() - 1.0) < 1e-9
        assert np.all(out.data >= 0)


def test_cosine_loss_values():
    y = np.array([1.0, 2.0, 3.0])
    assert float(cosine_loss(Tensor(y), y).data) == pytest.approx(-1.0, abs=1e-9)
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])
    assert float(cosine_loss(Tensor(a), b).data) == pytest.approx(0.0, abs=1e-12)
    for c in (0.5, 2.0, 100.0):
        assert float(cosine_loss(Tensor(c * y), y).data) == pytest.approx(-1.0, abs=1e-9)


def test_topic_cross_entropy():
    one_hot = np.zeros(5)
    one_hot[2] = 1.0
    assert float(topic_cross_entropy(Tensor(one_hot), one_hot).data) == pytest.approx(
        0.0, abs=1e-6
    )
    uniform = np.full(5, 0.2)
    assert float(topic_cross_entropy(Tensor(uniform), one_hot).data) == pytest.approx(
        np.log(5)
    )
    # cross entropy >= entropy, equality iff predicted == target
    rng = np.random.default_rng(8)
    for _ in range(20):
        r = rng.dirichlet(np.ones(5))
        q = rng.dirichlet(np.ones(5))
        ce = float(topic_cross_entropy(Tensor(q), r).data)
        entropy = -np.sum(r * np.log(np.maximum(r, 1e-300)))
        assert ce >= entropy - 1e-9
        assert float(topic_cross_entropy(Tensor(r), r).data) == pytest.approx(
            entropy, abs=1e-5
        )
