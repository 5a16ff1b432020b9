"""Walker/Vose alias tables: O(n) build, O(1) draws."""
from __future__ import annotations

import numpy as np
from numba import njit


def build_alias(weights) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(prob, alias)`` for nonnegative ``weights`` with positive total."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-d array")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise ValueError("weights sum to zero")
    k = w.size
    scaled = w * (k / total)
    prob = np.ones(k)
    alias = np.arange(k, dtype=np.int64)
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] -= 1.0 - scaled[s]
        if scaled[g] < 1.0:
            small.append(g)
        else:
            large.append(g)
    # leftovers are 1 up to rounding
    for i in small + large:
        prob[i] = 1.0
        alias[i] = i
    return prob, alias


def alias_pmf(prob: np.ndarray, alias: np.ndarray) -> np.ndarray:
    """Exact distribution encoded by an alias table (for testing)."""
    k = prob.size
    out = prob / k
    np.add.at(out, alias, (1.0 - prob) / k)
    return out


@njit(nogil=True, cache=True)
def alias_draw(prob, alias, rng):
    k = prob.shape[0]
    i = rng.integers(0, k)
    if rng.random() < prob[i]:
        return i
    return alias[i]
