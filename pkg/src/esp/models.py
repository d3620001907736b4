"""Full spectrum predictors: encoder + bidirectional head + peak attention
+ topic head, wired for batched training and single-molecule inference."""

from __future__ import annotations

import numpy as np

from .chem.fingerprint import circular_fingerprint
from .chem.molecule import Molecule, monoisotopic_mass
from .config import Config
from .encoders import (
    GineEncoder,
    GraphBatch,
    MlpEncoder,
    atom_feature_dim,
)
from .heads import AuxHead, PeakAttention, PredictionHead, precursor_bin, precursor_mask
from .nn import tape
from .nn.tape import Tensor
from .spectra.spectrum import InstrumentSetting, adduct_shift

MODEL_KINDS = ("mlp-pd", "gnn-pd")


class SpectraPredictor:
    """One prediction path (fingerprint or graph) with its heads."""

    def __init__(self, kind: str, config: Config, atom_vocab: list[str],
                 precursor_vocab: list[str], rng: np.random.Generator):
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.config = config
        self.atom_vocab = list(atom_vocab)
        self.precursor_vocab = list(precursor_vocab)
        is_dim = len(precursor_vocab) + 2  # one-hot + OTHER slot + energy
        if kind == "mlp-pd":
            self.encoder = MlpEncoder(
                config.fp_bits, is_dim, config.mlp_fp_hidden, config.mlp_is_hidden,
                config.latent_dim, rng,
            )
        else:
            self.encoder = GineEncoder(
                atom_feature_dim(self.atom_vocab, config.atom_extra_features),
                is_dim, config.latent_dim, config.gnn_layers, rng,
            )
        self.head = PredictionHead(config.latent_dim, config.pred_hidden, config.n_bins, rng)
        self.attention = PeakAttention(
            config.n_bins, config.attention_heads, config.attention_rank,
            config.attention_blend, rng,
        )
        self.aux = AuxHead(config.latent_dim, config.aux_hidden, config.topics, rng)

    # -- featurization --------------------------------------------------

    def fingerprint_vector(self, mol: Molecule) -> np.ndarray:
        fp = circular_fingerprint(mol, self.config.fp_radius, self.config.fp_bits)
        return fp.bits.astype(np.float64)

    def default_precursor_mass(self, mol: Molecule,
                               setting: InstrumentSetting) -> float:
        return monoisotopic_mass(mol) + adduct_shift(setting.precursor_type)

    # -- forward passes --------------------------------------------------

    def encode_batch(self, molecules, settings, fp_matrix=None) -> Tensor:
        if self.kind == "mlp-pd":
            if fp_matrix is None:
                fp_matrix = np.stack([self.fingerprint_vector(m) for m in molecules])
            is_matrix = np.stack(
                [s.feature_vector(self.precursor_vocab) for s in settings]
            )
            return self.encoder.encode_batch(fp_matrix, is_matrix)
        batch = GraphBatch(
            molecules, settings, self.atom_vocab, self.precursor_vocab,
            self.config.atom_extra_features,
        )
        return self.encoder.forward_batch(batch)

    def forward_batch(self, molecules, settings, anchors, fp_matrix=None,
                      dropout_rng: np.random.Generator | None = None):
        """(masked spectra Tensor (B, P), topic distributions Tensor (B, T))."""
        z = self.encode_batch(molecules, settings, fp_matrix)
        if dropout_rng is not None and self.config.dropout > 0.0:
            z = tape.dropout(z, self.config.dropout, dropout_rng)
        raw = self.head(z, anchors, apply_mask=False)
        mixed = self.attention(raw)
        mask = precursor_mask(anchors, self.config.n_bins)
        return mixed * Tensor(mask), self.aux(z)

    def predict(self, mol: Molecule, setting: InstrumentSetting | None = None,
                precursor_mass: float | None = None) -> np.ndarray:
        """Inference: predicted binned spectrum for one molecule."""
        setting = setting or InstrumentSetting()
        if precursor_mass is None:
            precursor_mass = self.default_precursor_mass(mol, setting)
        anchor = precursor_bin(precursor_mass, self.config.n_bins)
        spectra, _ = self.forward_batch([mol], [setting], np.array([anchor]))
        return spectra.data[0]

    def predict_batch(self, molecules, settings, precursor_masses) -> np.ndarray:
        anchors = np.array(
            [precursor_bin(m, self.config.n_bins) for m in precursor_masses]
        )
        spectra, _ = self.forward_batch(molecules, settings, anchors)
        return spectra.data

    # -- parameters -------------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        return {
            **self.encoder.parameters("encoder"),
            **self.head.parameters("head"),
            **self.attention.parameters("attention"),
            **self.aux.parameters("aux"),
        }

    def set_parameters(self, values: dict[str, np.ndarray]):
        params = self.parameters()
        missing = set(params) - set(values)
        if missing:
            raise KeyError(f"checkpoint is missing tensors: {sorted(missing)[:4]}")
        for name, p in params.items():
            arr = np.asarray(values[name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"tensor {name}: shape {arr.shape} != expected {p.data.shape}"
                )
            p.data = arr
