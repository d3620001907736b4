"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

import numpy as np

from .tape import Tensor


def finite_difference_check(
    loss_fn,
    params: dict[str, Tensor],
    h: float = 1e-4,
    rtol: float = 1e-4,
    atol: float = 1e-7,
) -> float:
    """Compare analytic gradients of `loss_fn()` against central differences.

    `loss_fn` must be deterministic and return a scalar Tensor built from
    `params`. Every parameter entry is perturbed by +-h. Raises AssertionError
    naming the first offending entry; returns the worst relative error seen.
    The small atol absorbs float noise on entries whose true gradient is zero.
    """
    for p in params.values():
        p.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }

    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            up = float(loss_fn().data)
            flat[i] = original - h
            down = float(loss_fn().data)
            flat[i] = original
            fd = (up - down) / (2.0 * h)
            a = grad_flat[i]
            err = abs(a - fd)
            scale = max(abs(a), abs(fd))
            rel = err / scale if scale > 0 else 0.0
            worst = max(worst, rel if scale > 0 else 0.0)
            if err > atol + rtol * scale:
                raise AssertionError(
                    f"gradient mismatch at {name}[{i}]: analytic={a:.8g} "
                    f"fd={fd:.8g} rel={rel:.3g}"
                )
    return worst
