import numpy as np
import pytest

from esp.heads import (
    AuxHead,
    PeakAttention,
    PrecursorOutOfRange,
    PredictionHead,
    attention_update,
    aux_loss,
    precursor_bin,
    spectral_loss,
    total_loss,
)
from esp.nn import Tensor, tape
from esp.nn.gradcheck import finite_difference_check


def _head(n_bins=20, latent=6, hidden=8, seed=0):
    return PredictionHead(latent, hidden, n_bins, np.random.default_rng(seed))


def test_precursor_bin():
    assert precursor_bin(181.07, 1000) == 181
    assert precursor_bin(0.4, 10) == 0
    with pytest.raises(PrecursorOutOfRange):
        precursor_bin(1000.0, 1000)
    with pytest.raises(PrecursorOutOfRange):
        precursor_bin(-1.0, 1000)


def test_prediction_head_contract():
    head = _head()
    rng = np.random.default_rng(1)
    for _ in range(10):
        z = Tensor(rng.normal(size=6))
        anchor = precursor_bin(rng.uniform(1, 19.4), 20)
        out = head(z, anchor).data
        assert out.shape == (20,)
        assert np.all(out >= 0.0)
        assert np.all(out[anchor + 1 :] == 0.0)


def test_prediction_head_gate_forced_forward():
    head = _head()
    head.gate_out.bias.data[:] = 1e6  # sigmoid saturates to 1
    z = Tensor(np.random.default_rng(2).normal(size=6))
    anchor = 19
    trunk = head.trunk2(head.trunk1(z))
    fwd = np.maximum(head.forward_out(trunk).data, 0.0)
    out = head(z, anchor, apply_mask=False).data
    assert np.allclose(out, fwd)


def test_prediction_head_reverse_alignment():
    head = _head()
    # zero the forward path and the gate (gate=0 selects the reverse copy)
    head.forward_out.weights.data[:] = 0.0
    head.forward_out.bias.data[:] = 0.0
    head.gate_out.weights.data[:] = 0.0
    head.gate_out.bias.data[:] = -1e6
    # make the reverse head emit a single unit at index j
    j = 3
    head.reverse_out.weights.data[:] = 0.0
    head.reverse_out.bias.data[:] = 0.0
    head.reverse_out.bias.data[j] = 1.0
    anchor = 12
    out = head(Tensor(np.zeros(6)), anchor).data
    expected = np.zeros(20)
    expected[anchor - j] = 1.0
    assert np.allclose(out, expected)


def test_prediction_head_batched_matches_single():
    head = _head()
    rng = np.random.default_rng(3)
    zs = rng.normal(size=(4, 6))
    anchors = np.array([5, 12, 19, 8])
    batched = head(Tensor(zs), anchors).data
    for i in range(4):
        single = head(Tensor(zs[i]), int(anchors[i])).data
        assert np.allclose(batched[i], single)


def test_attention_blend_identity():
    att = PeakAttention(10, 3, 4, blend=1.0, rng=np.random.default_rng(4))
    y = np.abs(np.random.default_rng(5).normal(size=10))
    out = attention_update(y, att).data
    assert np.array_equal(out, y)


def test_attention_zero_factors():
    att = PeakAttention(10, 2, 3, blend=0.25, rng=np.random.default_rng(6))
    att.factors.data[:] = 0.0
    y = np.abs(np.random.default_rng(7).normal(size=10))
    out = attention_update(y, att).data
    assert np.allclose(out, 0.25 * y)


def test_attention_hand_case():
    # P=3, M=1, L=1, D=(1,0,1)^T, y=(2,0,0), blend=0 -> (y D) D^T = (2,0,2)
    att = PeakAttention(3, 1, 1, blend=0.0, rng=np.random.default_rng(8))
    att.factors.data = np.array([[[1.0], [0.0], [1.0]]])
    att.head_logits.data = np.array([0.0])
    out = attention_update(np.array([2.0, 0.0, 0.0]), att).data
    assert np.allclose(out, [2.0, 0.0, 2.0], atol=1e-9)


def test_attention_head_weights_sum_to_one():
    att = PeakAttention(10, 4, 2, blend=0.5, rng=np.random.default_rng(9))
    att.head_logits.data = np.random.default_rng(10).normal(size=4)
    assert abs(att.head_weights().data.sum() - 1.0) < 1e-9


def test_attention_factorized_product_consistency():
    # (y Q) w == y (Q w) for Q = D D^T evaluated through the factor route
    rng = np.random.default_rng(11)
    d = rng.normal(size=(10, 3))
    y = rng.normal(size=10)
    w = rng.normal(size=10)
    left = ((y @ d) @ d.T) @ w
    right = y @ ((d @ (d.T @ w)))
    assert left == pytest.approx(right, abs=1e-9)


def test_aux_head_probability_simplex():
    aux = AuxHead(6, 8, 5, np.random.default_rng(12))
    rng = np.random.default_rng(13)
    for _ in range(5):
        out = aux(Tensor(rng.normal(size=6))).data
        assert out.shape == (5,)
        assert np.all(out >= 0.0)
        assert abs(out.sum() - 1.0) < 1e-9


def test_aux_loss_values():
    one_hot = np.zeros(4)
    one_hot[1] = 1.0
    assert float(aux_loss(one_hot, one_hot).data) == pytest.approx(0.0, abs=1e-6)
    uniform = np.full(4, 0.25)
    assert float(aux_loss(uniform, one_hot).data) == pytest.approx(np.log(4))


def test_spectral_loss_values():
    y = np.array([0.5, 1.0, 0.0, 2.0])
    assert float(spectral_loss(y, y).data) == pytest.approx(-1.0, abs=1e-9)
    a = np.array([1.0, 0.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0, 0.0])
    assert float(spectral_loss(a, b).data) == 0.0
    assert float(spectral_loss(3.0 * y, y).data) == pytest.approx(-1.0, abs=1e-9)


def test_total_loss_additivity():
    rng = np.random.default_rng(14)
    pred = np.abs(rng.normal(size=6))
    target = np.abs(rng.normal(size=6))
    r_hat = rng.dirichlet(np.ones(4))
    r = rng.dirichlet(np.ones(4))
    base = float(spectral_loss(pred, target).data)
    aux = float(aux_loss(r_hat, r).data)
    assert float(total_loss(pred, target, r_hat, r, 0.0).data) == pytest.approx(base)
    assert float(total_loss(pred, target, r_hat, r, 1.0).data) == pytest.approx(base + aux)
    assert float(total_loss(pred, target, r_hat, r, 0.3).data) == pytest.approx(
        base + 0.3 * aux
    )


def test_head_attention_aux_gradients():
    rng = np.random.default_rng(15)
    head = _head(n_bins=12, latent=5, hidden=6, seed=16)
    att = PeakAttention(12, 2, 3, blend=0.5, rng=np.random.default_rng(17))
    aux = AuxHead(5, 6, 4, np.random.default_rng(18))
    z = rng.normal(size=5)
    target = np.abs(rng.normal(size=12))
    topics = rng.dirichlet(np.ones(4))
    anchor = 10

    def loss_fn():
        raw = head(Tensor(z), anchor, apply_mask=False)
        mixed = att(raw)
        from esp.heads import precursor_mask

        masked = mixed * Tensor(precursor_mask(anchor, 12).reshape(12))
        return total_loss(masked, target, aux(Tensor(z)), topics, 0.5)

    params = {
        **head.parameters(),
        **att.parameters(),
        **aux.parameters(),
    }
    assert finite_difference_check(loss_fn, params) < 1e-4
