"""Per-run stream seeds.

stream = fmix(master + (index + 1) * GOLDEN) mod 2^64, where fmix is the
SplitMix64 finalizer:

    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27; z *= 0x94D049BB133111EB
    z ^= z >> 31

fmix is a bijection on 64-bit words, so distinct indices under one master
seed never collide.  Each stream seeds numpy's PCG64 via default_rng.
"""
from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
PRNG_FAMILY = "numpy PCG64 (default_rng), SplitMix64-derived stream seeds"


def fmix64(z: int) -> int:
    z &= MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK
    z ^= z >> 31
    return z


def derive_stream(master_seed: int, run_index: int) -> int:
    if run_index < 0:
        raise ValueError("run_index must be nonnegative")
    return fmix64((int(master_seed) + (run_index + 1) * GOLDEN) & MASK)


def derive_streams(master_seed: int, count: int, start: int = 0) -> np.ndarray:
    """Vectorized derive_stream for indices start .. start+count-1 (uint64)."""
    with np.errstate(over="ignore"):
        idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        z = np.uint64(int(master_seed) & MASK) + idx * np.uint64(GOLDEN)
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return z
