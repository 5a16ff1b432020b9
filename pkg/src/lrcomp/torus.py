"""Integer torus (Z mod m)^d with periodic l^p distances.

Vertices are handled in two encodings: coordinate tuples (``TorusPoint``) for
the public API, and flat C-order indices ``sum(c_i * m**(d-1-i))`` for the
array-based engines.  A flat index also encodes a displacement vector, so the
norm of every displacement is one length-n array (see ``displacement_norms``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TorusPoint = tuple[int, ...]


@dataclass(frozen=True)
class TorusSpec:
    d: int
    m: int
    p: float = 2.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"side length must be an integer >= 2, got {self.m!r}")
        if not (self.p >= 1):
            raise ValueError(f"norm exponent must be >= 1 (or inf), got {self.p!r}")

    @property
    def n(self) -> int:
        return self.m ** self.d

    @property
    def strides(self) -> np.ndarray:
        return self.m ** np.arange(self.d - 1, -1, -1, dtype=np.int64)


def _check_dim(coords: Sequence[int], spec: TorusSpec) -> None:
    if len(coords) != spec.d:
        raise ValueError(f"expected {spec.d} coordinates, got {len(coords)}")


def wrap(raw_coords: Sequence[int], spec: TorusSpec) -> TorusPoint:
    _check_dim(raw_coords, spec)
    return tuple(int(c) % spec.m for c in raw_coords)


def _aggregate(deltas: np.ndarray, p: float, axis: int = -1) -> np.ndarray:
    """l^p norm of nonnegative integer deltas along ``axis``."""
    if p == 1:
        return deltas.sum(axis=axis).astype(float)
    if math.isinf(p):
        return deltas.max(axis=axis).astype(float)
    if p == 2:
        # integer sum of squares first so equal-norm points get identical floats
        return np.sqrt((deltas.astype(np.int64) ** 2).sum(axis=axis).astype(float))
    return (deltas.astype(float) ** p).sum(axis=axis) ** (1.0 / p)


def torus_distance(u: Sequence[int], v: Sequence[int], spec: TorusSpec) -> float:
    _check_dim(u, spec)
    _check_dim(v, spec)
    delta = np.abs(np.asarray(u, dtype=np.int64) - np.asarray(v, dtype=np.int64)) % spec.m
    delta = np.minimum(delta, spec.m - delta)
    return float(_aggregate(delta, spec.p))


def to_flat(point: Sequence[int], spec: TorusSpec) -> int:
    return int(np.dot(np.asarray(wrap(point, spec), dtype=np.int64), spec.strides))


def from_flat(index: int, spec: TorusSpec) -> TorusPoint:
    if not 0 <= index < spec.n:
        raise ValueError(f"flat index {index} outside [0, {spec.n})")
    return tuple(int(c) for c in np.unravel_index(index, (spec.m,) * spec.d))


def all_coords(spec: TorusSpec) -> np.ndarray:
    """(n, d) int64 array; row i holds the coordinates of flat index i."""
    grids = np.indices((spec.m,) * spec.d, dtype=np.int64)
    return grids.reshape(spec.d, -1).T.copy()


def displacement_norms(spec: TorusSpec) -> np.ndarray:
    """Torus norm of each displacement, indexed by flat index (entry 0 is 0)."""
    c = all_coords(spec)
    c = np.minimum(c, spec.m - c)
    return _aggregate(c, spec.p, axis=1)


def sorted_nonzero_norms(spec: TorusSpec) -> np.ndarray:
    """Norms of the n-1 nonzero points in nondecreasing order."""
    return np.sort(displacement_norms(spec)[1:], kind="stable")


def nearest_nonzero(spec: TorusSpec, k: int) -> list[tuple[TorusPoint, float]]:
    """The k nonzero points closest to the origin, ties broken lexicographically."""
    if not 1 <= k <= spec.n - 1:
        raise ValueError(f"k must lie in [1, {spec.n - 1}], got {k}")
    norms = displacement_norms(spec)
    # flat C-order index is already lexicographic in the coordinates
    order = np.lexsort((np.arange(spec.n), norms))
    order = order[order != 0][:k]
    return [(from_flat(int(i), spec), float(norms[i])) for i in order]


def antipode(spec: TorusSpec) -> TorusPoint:
    return (spec.m // 2,) * spec.d
