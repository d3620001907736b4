"""Adam with decoupled weight decay and float32-grid parameter updates."""

from __future__ import annotations

import numpy as np

from .layers import to_float32_grid
from .tape import Tensor


class Adam:
    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.data
            p.data = to_float32_grid(p.data - self.lr * update)
            self.m[name] = to_float32_grid(m)
            self.v[name] = to_float32_grid(v)

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for name in self.params:
            out[f"adam.m.{name}"] = self.m[name]
            out[f"adam.v.{name}"] = self.v[name]
        return out

    def load_state_tensors(self, tensors: dict[str, np.ndarray], step_count: int):
        for name in self.params:
            self.m[name] = np.asarray(tensors[f"adam.m.{name}"], dtype=np.float64)
            self.v[name] = np.asarray(tensors[f"adam.v.{name}"], dtype=np.float64)
        self.step_count = step_count


def adam_step(params: dict[str, Tensor], optimizer: Adam):
    """One optimizer step over `params` (kept for symmetry with the tests)."""
    assert optimizer.params is params
    optimizer.step()
