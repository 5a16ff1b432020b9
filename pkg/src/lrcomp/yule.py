"""Rate-sigma Yule processes: exact size law and event-driven trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def geometric_pmf(p: float, k: int) -> float:
    """P(X = k) = p (1-p)^(k-1) on {1, 2, ...}."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return p * (1.0 - p) ** (k - 1)


def geometric_sizes(ages: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Yule sizes at the given ages, i.e. Geo(exp(-sigma * age)) draws.

    Inverse CDF with one uniform per draw; age 0 gives size 1.
    """
    ages = np.asarray(ages, dtype=float)
    u = 1.0 - rng.random(ages.shape)  # in (0, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.log1p(-np.exp(-sigma * ages))  # log(1 - p), -inf at age 0
        k = np.floor(np.log(u) / q)
    k = np.where(ages <= 0, 0.0, np.nan_to_num(k, nan=0.0, posinf=np.iinfo(np.int64).max - 1))
    return 1 + k.astype(np.int64)


def yule_size(sigma: float, t: float, rng: np.random.Generator) -> int:
    if sigma <= 0 or t < 0:
        raise ValueError("need sigma > 0 and t >= 0")
    if t == 0:
        return 1
    return int(geometric_sizes(np.array([t]), sigma, rng)[0])


@dataclass
class YuleTrajectory:
    """Birth times; ``times[i]`` is when the size became ``i + 1`` (times[0] = 0)."""

    rate: float
    times: np.ndarray = field(default_factory=lambda: np.zeros(1))
    capped: bool = False

    @property
    def events(self) -> list[tuple[float, int]]:
        return [(float(t), i + 1) for i, t in enumerate(self.times)]

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(1, self.times.size + 1)

    def size_at(self, t: float) -> int:
        return int(np.searchsorted(self.times, t, side="right"))


def yule_trajectory(sigma: float, t_max: float, size_cap: int, rng: np.random.Generator,
                    chunk: int = 1024) -> YuleTrajectory:
    """At size k the next birth comes after Exp(sigma k); stop at t_max or size_cap.

    Holding times are drawn in blocks, which does not change the law.
    """
    if sigma <= 0 or size_cap < 1:
        raise ValueError("need sigma > 0 and size_cap >= 1")
    blocks = [np.zeros(1)]
    t, k = 0.0, 1
    while k < size_cap:
        ks = np.arange(k, min(k + chunk, size_cap), dtype=float)
        ts = t + np.cumsum(rng.standard_exponential(ks.size) / (sigma * ks))
        keep = int(np.searchsorted(ts, t_max, side="right"))
        blocks.append(ts[:keep])
        if keep < ks.size:
            return YuleTrajectory(sigma, np.concatenate(blocks))
        t, k = float(ts[-1]), k + ks.size
    return YuleTrajectory(sigma, np.concatenate(blocks), capped=True)


def sup_scaled_size(traj: YuleTrajectory, t_max: float) -> float:
    """sup_{t <= t_max} size(t) exp(-sigma t); attained just after a birth."""
    keep = traj.times <= t_max
    return float(np.max(traj.sizes[keep] * np.exp(-traj.rate * traj.times[keep])))
