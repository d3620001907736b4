import random

import numpy as np
import pytest

from esp.chem import parse_smiles
from esp.encoders import (
    GineEncoder,
    GraphBatch,
    MlpEncoder,
    atom_feature_dim,
    atom_feature_matrix,
    build_atom_vocab,
    encode_gnn,
    encode_mlp,
    readout_mean,
)
from esp.nn import Tensor, tape
from esp.nn.gradcheck import finite_difference_check
from esp.spectra import InstrumentSetting

PRECURSOR_VOCAB = ["[M+H]+", "[M+Na]+"]
SETTING = InstrumentSetting("[M+H]+", 0.35)


def _vocab():
    return ["C", "N", "O", "OTHER"]


def _gine(hidden=8, layers=3, seed=0):
    rng = np.random.default_rng(seed)
    return GineEncoder(atom_feature_dim(_vocab()), len(PRECURSOR_VOCAB) + 2, hidden, layers, rng)


def test_mlp_encoder_zero_input_zero_bias():
    rng = np.random.default_rng(0)
    enc = MlpEncoder(16, 4, 8, 8, 8, rng)
    z = enc.encode(np.zeros(16), np.zeros(4))
    # relu(W*0 + 0) = 0 through every stage once biases are zeroed
    for layer in (enc.fp_net, enc.is_net, enc.out_net):
        layer.bias.data[:] = 0.0
    z = enc.encode(np.zeros(16), np.zeros(4))
    assert np.array_equal(z.data, np.zeros(8))


def test_mlp_encoder_output_dim_and_determinism():
    rng = np.random.default_rng(1)
    enc = MlpEncoder(32, 4, 16, 8, 12, rng)
    fp = np.random.default_rng(2).random(32)
    is_vec = SETTING.feature_vector(PRECURSOR_VOCAB)
    z1 = enc.encode(fp, is_vec)
    z2 = enc.encode(fp.copy(), is_vec.copy())
    assert z1.data.shape == (12,)
    assert np.array_equal(z1.data, z2.data)


def test_atom_features_other_slot():
    mol = parse_smiles("ClCCl")  # Cl missing from the vocabulary
    feats = atom_feature_matrix(mol, _vocab())
    other_col = _vocab().index("OTHER")
    assert feats[0, other_col] == 1.0
    assert feats[1, other_col] == 0.0


def test_init_node_states_same_element_same_state():
    enc = _gine()
    mol = parse_smiles("CCO")
    h = enc.init_node_states(mol, SETTING, _vocab(), PRECURSOR_VOCAB)
    assert h.data.shape == (3, 8)
    assert np.array_equal(h.data[0], h.data[1])
    assert not np.array_equal(h.data[0], h.data[2])


def test_gine_layer_isolated_node():
    enc = _gine()
    mol = parse_smiles("C.C")  # two disconnected atoms
    h = enc.init_node_states(mol, SETTING, _vocab(), PRECURSOR_VOCAB)
    out = enc.gine_layer(h, mol, 0)
    # empty neighborhoods: relu(NN(0))
    zero_msg = tape.relu(enc.layer_nets[0](Tensor(np.zeros(8))))
    assert np.allclose(out.data[0], zero_msg.data)
    assert np.allclose(out.data[1], zero_msg.data)


def test_gine_layer_identity_network_hand_case():
    enc = _gine()
    enc.layer_nets[0].weights.data = np.eye(8)
    enc.layer_nets[0].bias.data = np.zeros(8)
    mol = parse_smiles("CO")
    h = enc.init_node_states(mol, SETTING, _vocab(), PRECURSOR_VOCAB)
    edge_state = enc.edge_net(Tensor(np.array([[1.0, 0, 0, 0]]))).data[0]
    out = enc.gine_layer(h, mol, 0)
    expected_0 = np.maximum(h.data[1] + edge_state, 0.0)
    expected_1 = np.maximum(h.data[0] + edge_state, 0.0)
    assert np.allclose(out.data[0], expected_0)
    assert np.allclose(out.data[1], expected_1)


def test_readout_mean():
    h = Tensor(np.array([[1.0, 3.0], [3.0, 5.0]]))
    assert np.allclose(readout_mean(h).data, [2.0, 4.0])
    single = Tensor(np.array([[7.0, 1.0]]))
    assert np.allclose(readout_mean(single).data, [7.0, 1.0])


def test_encode_gnn_single_atom_finite():
    enc = _gine()
    z = encode_gnn(enc, parse_smiles("C"), SETTING, _vocab(), PRECURSOR_VOCAB)
    assert z.data.shape == (8,)
    assert np.all(np.isfinite(z.data))


def test_encode_gnn_conditioning_wired_in():
    enc = _gine()
    mol = parse_smiles("CCO")
    z = encode_gnn(enc, mol, SETTING, _vocab(), PRECURSOR_VOCAB)
    hot = InstrumentSetting("[M+H]+", 0.95)
    z_hot = encode_gnn(enc, mol, hot, _vocab(), PRECURSOR_VOCAB)
    assert not np.array_equal(z.data, z_hot.data)


def test_encode_gnn_permutation_invariance():
    enc = _gine()
    rng = random.Random(3)
    for smiles in ["CCO", "c1ccccc1", "CC(=O)O", "OC1C(O)C(O)C(O)C(O)C1O"]:
        mol = parse_smiles(smiles)
        ref = encode_gnn(enc, mol, SETTING, _vocab(), PRECURSOR_VOCAB).data
        for _ in range(4):
            perm = list(range(len(mol.atoms)))
            rng.shuffle(perm)
            z = encode_gnn(enc, mol.permuted(perm), SETTING, _vocab(), PRECURSOR_VOCAB).data
            assert np.max(np.abs(z - ref)) < 1e-6


def test_gine_locality():
    # a node's state after K layers only sees its K-hop neighborhood
    enc = _gine(layers=2)
    chain = parse_smiles("CCCOCC")  # perturbed atom sits at index 3
    variant = parse_smiles("CCCNCC")
    h_a = enc.init_node_states(chain, SETTING, _vocab(), PRECURSOR_VOCAB)
    h_b = enc.init_node_states(variant, SETTING, _vocab(), PRECURSOR_VOCAB)
    for k in range(2):
        h_a = enc.gine_layer(h_a, chain, k)
        h_b = enc.gine_layer(h_b, variant, k)
    # atom 0 is 3 hops from the changed atom; 2 layers cannot reach it
    assert np.array_equal(h_a.data[0], h_b.data[0])
    # atom 1 is 2 hops away and does see the change
    assert not np.array_equal(h_a.data[1], h_b.data[1])


def test_batched_gnn_matches_single():
    enc = _gine()
    mols = [parse_smiles(s) for s in ["CCO", "c1ccccc1", "C"]]
    settings = [SETTING, InstrumentSetting("[M+Na]+", 0.2), SETTING]
    batch = GraphBatch(mols, settings, _vocab(), PRECURSOR_VOCAB)
    z_batch = enc.forward_batch(batch).data
    for i, (mol, setting) in enumerate(zip(mols, settings)):
        z_one = encode_gnn(enc, mol, setting, _vocab(), PRECURSOR_VOCAB).data
        assert np.allclose(z_batch[i], z_one, atol=1e-12)


def test_mlp_encoder_gradients():
    rng = np.random.default_rng(4)
    enc = MlpEncoder(12, 4, 6, 5, 7, rng)
    fp = rng.random(12)
    is_vec = rng.random(4)
    target = rng.random(7)

    def loss_fn():
        z = enc.encode(fp, is_vec)
        diff = z - Tensor(target)
        return tape.tsum(diff * diff)

    assert finite_difference_check(loss_fn, enc.parameters()) < 1e-4


def test_gine_encoder_gradients():
    enc = _gine(hidden=6, layers=3, seed=5)
    mol = parse_smiles("CC(=O)O")
    target = np.random.default_rng(6).random(6)

    def loss_fn():
        z = encode_gnn(enc, mol, SETTING, _vocab(), PRECURSOR_VOCAB)
        diff = z - Tensor(target)
        return tape.tsum(diff * diff)

    assert finite_difference_check(loss_fn, enc.parameters()) < 1e-4


def test_encode_mlp_wrapper():
    rng = np.random.default_rng(7)
    enc = MlpEncoder(8, len(PRECURSOR_VOCAB) + 2, 4, 4, 4, rng)
    z = encode_mlp(enc, np.ones(8), SETTING, PRECURSOR_VOCAB)
    assert z.data.shape == (4,)
