"""Dense layers with float32-grid parameters.

Parameters are float64 arrays whose values always sit exactly on the
float32 grid (enforced at init and after every optimizer step), so binary
checkpoints that store float32 round-trip losslessly.
"""

from __future__ import annotations

import numpy as np

from . import tape
from .tape import Tensor

ACTIVATIONS = ("relu", "sigmoid", "softmax", "identity")


class DimensionMismatch(ValueError):
    """Input vector length does not match the layer."""


def to_float32_grid(values: np.ndarray) -> np.ndarray:
    return values.astype(np.float32).astype(np.float64)


class Dense:
    """Affine map out = act(W x + b) with W of shape (out_dim, in_dim)."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "relu",
                 rng: np.random.Generator | None = None):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        rng = rng or np.random.default_rng(0)
        if activation == "relu":
            bound = np.sqrt(6.0 / in_dim)  # Kaiming-uniform
        else:
            bound = np.sqrt(6.0 / (in_dim + out_dim))  # Xavier-uniform
        weights = to_float32_grid(rng.uniform(-bound, bound, size=(out_dim, in_dim)))
        self.weights = Tensor(weights, requires_grad=True)
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True)
        self.activation = activation
        self.in_dim = in_dim
        self.out_dim = out_dim

    def __call__(self, x) -> Tensor:
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.data.shape[-1] != self.in_dim:
            raise DimensionMismatch(
                f"layer expects {self.in_dim} inputs, got {x.data.shape[-1]}"
            )
        if x.data.ndim == 1:
            out = tape.matmul(self.weights, x) + self.bias
        else:
            out = tape.matmul(x, tape.transpose(self.weights)) + self.bias
        if self.activation == "relu":
            return tape.relu(out)
        if self.activation == "sigmoid":
            return tape.sigmoid(out)
        if self.activation == "softmax":
            return tape.softmax(out, axis=-1)
        return out

    def parameters(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.weight": self.weights, f"{prefix}.bias": self.bias}


def forward(layer: Dense, x) -> Tensor:
    return layer(x)
