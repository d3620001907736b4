"""Spectrum prediction heads.

The prediction head runs a two-layer trunk and emits three length-P maps:
a forward intensity map indexed by fragment bin, a reverse map indexed by
neutral-loss offset from the precursor bin, and a per-bin sigmoid gate
blending the two. Peak co-occurrence attention then mixes bins through
low-rank factors, and a softmax head predicts the topic distribution as the
auxiliary target.
"""

from __future__ import annotations

import numpy as np

from .nn import tape
from .nn.layers import Dense, to_float32_grid
from .nn.losses import cosine_loss, topic_cross_entropy
from .nn.tape import Tensor


class PrecursorOutOfRange(ValueError):
    """Precursor mass does not fall inside the binned range."""


def precursor_bin(precursor_mass: float, n_bins: int, bin_width: float = 1.0) -> int:
    """Bin index holding the precursor; masses at or past the range raise."""
    if not 0.0 <= precursor_mass < n_bins * bin_width:
        raise PrecursorOutOfRange(
            f"precursor mass {precursor_mass} outside [0, {n_bins * bin_width})"
        )
    return int(round(precursor_mass / bin_width))


def precursor_mask(anchor_bins, n_bins: int) -> np.ndarray:
    """Rows are 1 up to and including the precursor bin, 0 above it."""
    anchors = np.atleast_1d(np.asarray(anchor_bins, dtype=np.int64))
    mask = np.arange(n_bins)[None, :] <= anchors[:, None]
    return mask.astype(np.float64)


class PredictionHead:
    """Latent vector to non-negative binned spectrum, bidirectionally."""

    def __init__(self, latent_dim: int, hidden: int, n_bins: int,
                 rng: np.random.Generator):
        self.trunk1 = Dense(latent_dim, hidden, "relu", rng)
        self.trunk2 = Dense(hidden, hidden, "relu", rng)
        self.forward_out = Dense(hidden, n_bins, "identity", rng)
        self.reverse_out = Dense(hidden, n_bins, "identity", rng)
        self.gate_out = Dense(hidden, n_bins, "sigmoid", rng)
        self.n_bins = n_bins

    def __call__(self, z: Tensor, anchor_bins, apply_mask: bool = True) -> Tensor:
        trunk = self.trunk2(self.trunk1(z))
        fwd = self.forward_out(trunk)
        rev = tape.reverse_align(self.reverse_out(trunk), anchor_bins)
        gate = self.gate_out(trunk)
        blended = tape.relu(gate * fwd + (1.0 - gate) * rev)
        if apply_mask:
            mask = precursor_mask(anchor_bins, self.n_bins)
            blended = blended * Tensor(mask.reshape(blended.data.shape))
        return blended

    def parameters(self, prefix: str = "head") -> dict[str, Tensor]:
        return {
            **self.trunk1.parameters(f"{prefix}.trunk1"),
            **self.trunk2.parameters(f"{prefix}.trunk2"),
            **self.forward_out.parameters(f"{prefix}.forward"),
            **self.reverse_out.parameters(f"{prefix}.reverse"),
            **self.gate_out.parameters(f"{prefix}.gate"),
        }


class PeakAttention:
    """Low-rank multi-head co-occurrence mixing of predicted bins.

    Each head holds a P x M factor D_l; the full P x P co-occurrence matrix
    D_l D_l^T is never materialized, the product runs as (y D_l) D_l^T. Head
    weights are a softmax over learned logits, and `blend` (fixed) mixes the
    mixed spectrum back with the original. Output is relu-clamped.
    """

    def __init__(self, n_bins: int, n_heads: int, rank: int, blend: float,
                 rng: np.random.Generator, init_scale: float = 0.01):
        if not 0.0 <= blend <= 1.0:
            raise ValueError("blend must lie in [0, 1]")
        if rank >= n_bins:
            raise ValueError(f"rank {rank} must be below bin count {n_bins}")
        self.factors = Tensor(
            to_float32_grid(rng.normal(0.0, init_scale, size=(n_heads, n_bins, rank))),
            requires_grad=True,
        )
        self.head_logits = Tensor(np.zeros(n_heads), requires_grad=True)
        self.blend = blend
        self.n_heads = n_heads

    def head_weights(self) -> Tensor:
        return tape.softmax(self.head_logits, axis=-1)

    def __call__(self, y: Tensor) -> Tensor:
        weights = self.head_weights()
        mixed = None
        for l in range(self.n_heads):
            factor = tape.gather_rows(self.factors, np.array([l]))
            factor = tape.tsum(factor, axis=0)  # (P, M)
            term = tape.matmul(tape.matmul(y, factor), tape.transpose(factor))
            term = term * tape.gather_rows(weights, np.array([l]))
            mixed = term if mixed is None else mixed + term
        return tape.relu(self.blend * y + (1.0 - self.blend) * mixed)

    def parameters(self, prefix: str = "attention") -> dict[str, Tensor]:
        return {f"{prefix}.factors": self.factors, f"{prefix}.head_logits": self.head_logits}


class AuxHead:
    """Two dense layers ending in a softmax over topics."""

    def __init__(self, latent_dim: int, hidden: int, n_topics: int,
                 rng: np.random.Generator):
        self.hidden = Dense(latent_dim, hidden, "relu", rng)
        self.out = Dense(hidden, n_topics, "softmax", rng)

    def __call__(self, z: Tensor) -> Tensor:
        return self.out(self.hidden(z))

    def parameters(self, prefix: str = "aux") -> dict[str, Tensor]:
        return {
            **self.hidden.parameters(f"{prefix}.hidden"),
            **self.out.parameters(f"{prefix}.out"),
        }


def attention_update(y, attention: PeakAttention) -> Tensor:
    """Apply co-occurrence mixing to a predicted spectrum."""
    y_t = y if isinstance(y, Tensor) else Tensor(np.asarray(y, dtype=np.float64))
    return attention(y_t)


def spectral_loss(predicted, target) -> Tensor:
    """-cos(predicted, target); scale-invariant."""
    p = predicted if isinstance(predicted, Tensor) else Tensor(predicted)
    return cosine_loss(p, np.asarray(target, dtype=np.float64))


def aux_loss(predicted_topics, target_topics) -> Tensor:
    """Cross entropy against the topic-model distribution."""
    p = predicted_topics if isinstance(predicted_topics, Tensor) else Tensor(predicted_topics)
    return topic_cross_entropy(p, np.asarray(target_topics, dtype=np.float64))


def total_loss(predicted, target, predicted_topics, target_topics,
               aux_weight: float) -> Tensor:
    """Spectral loss plus aux_weight times the topic loss."""
    loss = spectral_loss(predicted, target)
    if aux_weight:
        loss = loss + aux_weight * aux_loss(predicted_topics, target_topics)
    return loss
