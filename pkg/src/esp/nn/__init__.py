from . import tape
from .layers import ACTIVATIONS, Dense, DimensionMismatch, forward, to_float32_grid
from .losses import bce, cosine_loss, topic_cross_entropy
from .optim import Adam, adam_step
from .tape import Tensor, dropout, softmax

__all__ = [
    "ACTIVATIONS",
    "Adam",
    "Dense",
    "DimensionMismatch",
    "Tensor",
    "adam_step",
    "bce",
    "cosine_loss",
    "dropout",
    "forward",
    "softmax",
    "tape",
    "to_float32_grid",
    "topic_cross_entropy",
]
