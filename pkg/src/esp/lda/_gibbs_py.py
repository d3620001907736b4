"""Pure-Python collapsed Gibbs sweep, the fallback for the compiled kernel.

Both kernels must produce bit-identical chains: they share the splitmix64
generator below and compute the sampling distribution with the same
floating-point operations in the same order.
"""

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance one step; returns (new_state, 64-bit output)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return state, z ^ (z >> 31)


def next_double(state: int) -> tuple[int, float]:
    """Uniform double in [0, 1) with 53 random bits."""
    state, z = splitmix64_next(state)
    return state, (z >> 11) * _INV_2_53


def sweep(z, doc_ids, word_ids, n_tw, n_t, n_dt, alpha, beta, state):
    """One full resampling pass over all tokens; counts updated in place.

    Returns the advanced RNG state. The per-token distribution is
    p(t) = (n_tw[t,w]+beta) * (n_dt[d,t]+alpha) / (n_t[t]+V*beta), with the
    current token excluded from all counts.
    """
    v_beta = n_tw.shape[1] * beta
    state = int(state)
    for i in range(len(z)):
        t_old = z[i]
        d = doc_ids[i]
        w = word_ids[i]
        n_tw[t_old, w] -= 1.0
        n_t[t_old] -= 1.0
        n_dt[d, t_old] -= 1.0

        probs = (n_tw[:, w] + beta) * (n_dt[d, :] + alpha) / (n_t + v_beta)
        cum = np.cumsum(probs)
        state, u = next_double(state)
        r = u * cum[-1]
        t_new = int(np.searchsorted(cum, r, side="right"))
        if t_new >= len(cum):
            t_new = len(cum) - 1

        z[i] = t_new
        n_tw[t_new, w] += 1.0
        n_t[t_new] += 1.0
        n_dt[d, t_new] += 1.0
    return state


KERNEL_NAME = "python"
