"""Latent molecular encoders.

Two routes to the latent vector z: an MLP over the circular fingerprint and
a message-passing stack over the molecular graph, both conditioned on the
instrument setting. Message passing sums neighbor states plus bond-type
embeddings over incident edges (each bond contributes once per direction),
applies a per-layer dense update with relu, and mean-pools node states into
the graph embedding.
"""

from __future__ import annotations

import numpy as np

from .chem.elements import MONOISOTOPIC_MASS
from .chem.molecule import Molecule
from .nn import tape
from .nn.layers import Dense
from .nn.tape import Tensor
from .spectra.spectrum import InstrumentSetting

ATOM_OTHER = "OTHER"
BOND_INDEX = {"single": 0, "double": 1, "triple": 2, "aromatic": 3}
MASS_SCALE = 0.01


def build_atom_vocab(molecules) -> list[str]:
    """Sorted element symbols seen in training molecules, plus an OTHER slot."""
    symbols = sorted({a.symbol for m in molecules for a in m.atoms})
    return symbols + [ATOM_OTHER]


def atom_feature_matrix(
    mol: Molecule, vocab: list[str], extra_features: bool = True
) -> np.ndarray:
    """Per-atom features: element one-hot (+OTHER), scaled mass, and (when
    enabled) aromaticity and formal charge."""
    n_extra = 3 if extra_features else 1
    out = np.zeros((len(mol.atoms), len(vocab) + n_extra))
    index = {sym: i for i, sym in enumerate(vocab)}
    other = index[ATOM_OTHER]
    for i, atom in enumerate(mol.atoms):
        out[i, index.get(atom.symbol, other)] = 1.0
        out[i, len(vocab)] = MONOISOTOPIC_MASS.get(atom.symbol, 0.0) * MASS_SCALE
        if extra_features:
            out[i, len(vocab) + 1] = float(atom.aromatic)
            out[i, len(vocab) + 2] = float(atom.charge)
    return out


def bond_feature_matrix(mol: Molecule) -> np.ndarray:
    out = np.zeros((len(mol.bonds), len(BOND_INDEX)))
    for i, bond in enumerate(mol.bonds):
        out[i, BOND_INDEX[bond.order]] = 1.0
    return out


def atom_feature_dim(vocab: list[str], extra_features: bool = True) -> int:
    return len(vocab) + (3 if extra_features else 1)


class GraphBatch:
    """Index arrays for running message passing over several graphs at once."""

    def __init__(self, molecules, settings, atom_vocab, precursor_vocab,
                 extra_features: bool = True):
        feats = []
        is_rows = []
        node_graph = []
        edge_src: list[int] = []
        edge_dst: list[int] = []
        edge_index: list[int] = []
        bond_rows = []
        offset = 0
        bond_offset = 0
        for g, (mol, setting) in enumerate(zip(molecules, settings)):
            feats.append(atom_feature_matrix(mol, atom_vocab, extra_features))
            is_vec = setting.feature_vector(precursor_vocab)
            is_rows.extend([is_vec] * len(mol.atoms))
            node_graph.extend([g] * len(mol.atoms))
            bond_rows.append(bond_feature_matrix(mol))
            for bi, bond in enumerate(mol.bonds):
                a, b = bond.a + offset, bond.b + offset
                edge_src.extend((a, b))
                edge_dst.extend((b, a))
                edge_index.extend((bond_offset + bi, bond_offset + bi))
            offset += len(mol.atoms)
            bond_offset += len(mol.bonds)
        self.n_graphs = len(molecules)
        self.n_nodes = offset
        self.atom_features = np.vstack(feats) if feats else np.zeros((0, 0))
        self.is_features = np.asarray(is_rows)
        self.node_graph = np.asarray(node_graph, dtype=np.int64)
        self.edge_src = np.asarray(edge_src, dtype=np.int64)
        self.edge_dst = np.asarray(edge_dst, dtype=np.int64)
        self.edge_index = np.asarray(edge_index, dtype=np.int64)
        self.bond_features = (
            np.vstack(bond_rows) if bond_offset else np.zeros((0, len(BOND_INDEX)))
        )
        counts = np.bincount(self.node_graph, minlength=self.n_graphs).astype(float)
        self.node_counts = counts


class MlpEncoder:
    """z = NN(CONCAT(NN(fingerprint), NN(instrument)))."""

    def __init__(self, fp_bits: int, is_dim: int, fp_hidden: int, is_hidden: int,
                 latent_dim: int, rng: np.random.Generator):
        self.fp_net = Dense(fp_bits, fp_hidden, "relu", rng)
        self.is_net = Dense(is_dim, is_hidden, "relu", rng)
        self.out_net = Dense(fp_hidden + is_hidden, latent_dim, "relu", rng)
        self.latent_dim = latent_dim

    def encode(self, fp_vector, is_vector) -> Tensor:
        fp_t = fp_vector if isinstance(fp_vector, Tensor) else Tensor(np.asarray(fp_vector, dtype=np.float64))
        is_t = is_vector if isinstance(is_vector, Tensor) else Tensor(np.asarray(is_vector, dtype=np.float64))
        return self.out_net(tape.concat([self.fp_net(fp_t), self.is_net(is_t)], axis=-1))

    encode_batch = encode

    def parameters(self, prefix: str = "mlp") -> dict[str, Tensor]:
        return {
            **self.fp_net.parameters(f"{prefix}.fp"),
            **self.is_net.parameters(f"{prefix}.is"),
            **self.out_net.parameters(f"{prefix}.out"),
        }


class GineEncoder:
    """K rounds of edge-aware message passing with mean-pooling readout."""

    def __init__(self, atom_dim: int, is_dim: int, hidden: int, n_layers: int,
                 rng: np.random.Generator):
        if n_layers < 1:
            raise ValueError("need at least one message-passing layer")
        self.atom_net = Dense(atom_dim, hidden, "relu", rng)
        self.is_net = Dense(is_dim, hidden, "relu", rng)
        self.init_net = Dense(2 * hidden, hidden, "relu", rng)
        self.edge_net = Dense(len(BOND_INDEX), hidden, "relu", rng)
        self.layer_nets = [Dense(hidden, hidden, "identity", rng) for _ in range(n_layers)]
        self.hidden = hidden
        self.n_layers = n_layers

    def node_init(self, atom_features, is_features) -> Tensor:
        ax = self.atom_net(Tensor(atom_features))
        ix = self.is_net(Tensor(is_features))
        return self.init_net(tape.concat([ax, ix], axis=-1))

    def propagate(self, h: Tensor, edge_src, edge_dst, edge_states: Tensor,
                  edge_index, n_nodes: int, k: int) -> Tensor:
        messages = tape.segment_sum(tape.gather_rows(h, edge_src), edge_dst, n_nodes)
        if len(edge_index):
            messages = messages + tape.segment_sum(
                tape.gather_rows(edge_states, edge_index), edge_dst, n_nodes
            )
        return tape.relu(self.layer_nets[k](messages))

    def forward_batch(self, batch: GraphBatch) -> Tensor:
        h = self.node_init(batch.atom_features, batch.is_features)
        edge_states = self.edge_net(Tensor(batch.bond_features))
        for k in range(self.n_layers):
            h = self.propagate(
                h, batch.edge_src, batch.edge_dst, edge_states,
                batch.edge_index, batch.n_nodes, k,
            )
        pooled = tape.segment_sum(h, batch.node_graph, batch.n_graphs)
        return tape.mul(pooled, Tensor(1.0 / batch.node_counts[:, None]))

    def parameters(self, prefix: str = "gnn") -> dict[str, Tensor]:
        out = {
            **self.atom_net.parameters(f"{prefix}.atom"),
            **self.is_net.parameters(f"{prefix}.is"),
            **self.init_net.parameters(f"{prefix}.init"),
            **self.edge_net.parameters(f"{prefix}.edge"),
        }
        for k, net in enumerate(self.layer_nets):
            out.update(net.parameters(f"{prefix}.layer{k}"))
        return out

    # single-molecule views, mostly for tests and interactive use

    def init_node_states(self, mol: Molecule, setting: InstrumentSetting,
                         atom_vocab, precursor_vocab, extra_features=True) -> Tensor:
        feats = atom_feature_matrix(mol, atom_vocab, extra_features)
        is_vec = setting.feature_vector(precursor_vocab)
        return self.node_init(feats, np.tile(is_vec, (len(mol.atoms), 1)))

    def gine_layer(self, h: Tensor, mol: Molecule, k: int) -> Tensor:
        src, dst, eidx = [], [], []
        for bi, bond in enumerate(mol.bonds):
            src.extend((bond.a, bond.b))
            dst.extend((bond.b, bond.a))
            eidx.extend((bi, bi))
        edge_states = self.edge_net(Tensor(bond_feature_matrix(mol)))
        return self.propagate(
            h,
            np.asarray(src, dtype=np.int64),
            np.asarray(dst, dtype=np.int64),
            edge_states,
            np.asarray(eidx, dtype=np.int64),
            len(mol.atoms),
            k,
        )


def readout_mean(h: Tensor) -> Tensor:
    """Mean-pool node states into a single latent vector."""
    return tape.tmean(h, axis=0)


def encode_gnn(encoder: GineEncoder, mol: Molecule, setting: InstrumentSetting,
               atom_vocab, precursor_vocab, extra_features=True) -> Tensor:
    h = encoder.init_node_states(mol, setting, atom_vocab, precursor_vocab, extra_features)
    for k in range(encoder.n_layers):
        h = encoder.gine_layer(h, mol, k)
    return readout_mean(h)


def encode_mlp(encoder: MlpEncoder, fp_vector, setting: InstrumentSetting,
               precursor_vocab) -> Tensor:
    return encoder.encode(fp_vector, setting.feature_vector(precursor_vocab))
