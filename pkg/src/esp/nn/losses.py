"""Training losses: cosine spectral loss, weighted BCE, topic cross-entropy."""

from __future__ import annotations

import numpy as np

from . import tape
from .tape import Tensor

PROB_EPS = 1e-7
NORM_FLOOR = 1e-12


def cosine_loss(predicted: Tensor, target: np.ndarray) -> Tensor:
    """-cos(predicted, target), averaged over rows for batched inputs.

    Scale-invariant in the prediction; a zero-norm side contributes 0 loss
    (the denominator is floored, not the value).
    """
    target_t = Tensor(np.asarray(target, dtype=np.float64))
    axis = -1
    dot = tape.tsum(tape.mul(predicted, target_t), axis=axis)
    norm_p = tape.sqrt(tape.tsum(tape.mul(predicted, predicted), axis=axis))
    norm_t = tape.sqrt(tape.tsum(tape.mul(target_t, target_t), axis=axis))
    denom = tape.clip(tape.mul(norm_p, norm_t), low=NORM_FLOOR)
    cos = tape.div(dot, denom)
    return -tape.tmean(cos) if cos.data.ndim else -cos


def bce(p: Tensor, label, weight=1.0) -> Tensor:
    """Weighted binary cross entropy with probabilities clamped at 1e-7."""
    label_t = Tensor(np.asarray(label, dtype=np.float64))
    clamped = tape.clip(p, low=PROB_EPS, high=1.0 - PROB_EPS)
    loss = -(
        tape.mul(label_t, tape.log(clamped))
        + tape.mul(1.0 - label_t, tape.log(1.0 - clamped))
    )
    weighted = tape.mul(loss, weight)
    return tape.tsum(weighted) if weighted.data.ndim else weighted


def topic_cross_entropy(predicted: Tensor, target: np.ndarray) -> Tensor:
    """-sum_t r_t log r_hat_t with predictions clamped at 1e-7.

    Batched inputs average over rows.
    """
    target_t = Tensor(np.asarray(target, dtype=np.float64))
    clamped = tape.clip(predicted, low=PROB_EPS)
    per_row = -tape.tsum(tape.mul(target_t, tape.log(clamped)), axis=-1)
    return tape.tmean(per_row) if per_row.data.ndim else per_row
