"""Generalised Polya urn with replacement matrix diag(1, z).

At alpha_- = alpha_+ = 0 the competition on the complete graph is exactly
this urn started from (1, z): after n - 2 draws the minus balls count N^-
and the plus balls divided by z count N^+.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class UrnState:
    b_minus: float
    b_plus: float
    draws: int = 0

    def __post_init__(self):
        if not (self.b_minus > 0 and self.b_plus > 0):
            raise ValueError("urn contents must be positive")


def urn_step(state: UrnState, z: float, rng: np.random.Generator) -> UrnState:
    if rng.random() * (state.b_minus + state.b_plus) < state.b_minus:
        return UrnState(state.b_minus + 1.0, state.b_plus, state.draws + 1)
    return UrnState(state.b_minus, state.b_plus + z, state.draws + 1)


@njit(nogil=True, cache=True)
def _urn_counts(n, z, rng):
    # integer counts; b_plus = z * n_plus exactly
    n_minus, n_plus = 1, 1
    for _ in range(n - 2):
        if rng.random() * (n_minus + z * n_plus) < n_minus:
            n_minus += 1
        else:
            n_plus += 1
    return n_minus, n_plus


def urn_run(n: int, z: float, seed) -> tuple[int, int]:
    """Terminal (N^-, N^+) of the urn with n - 2 draws; they sum to n."""
    if n < 3:
        raise ValueError(f"urn_run needs n >= 3, got {n}")
    if not z > 0:
        raise ValueError("z must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_minus, n_plus = _urn_counts(n, float(z), rng)
    return int(n_minus), int(n_plus)
