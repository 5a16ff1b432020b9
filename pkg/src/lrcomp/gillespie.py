"""Exact oracle engine: the jump chain of the competition process.

Every susceptible vertex carries two cached sums, the minus-kernel and the
plus-kernel summed over the currently infected vertices of each type.  One
step draws the holding time, then the vertex (proportional to its total
rate), then the type (with the p_k split).  Adding a vertex costs one O(n)
pass to update the caches, so a full run is O(n^2); fine for n up to a few
thousand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .rates import ModelParams, RateSummary, total_rates
from .torus import all_coords, displacement_norms

SUSCEPTIBLE, MINUS_OWNED, PLUS_OWNED = 0, 1, 2
ORACLE_CAP = 4096


class OracleCapExceeded(ValueError):
    """Raised when an instance is too large for the O(n^2) oracle."""


@dataclass
class InfectionState:
    owner: np.ndarray  # int8 per vertex: 0 susceptible, 1 minus, 2 plus
    counts: np.ndarray  # int64 [count_minus, count_plus]
    time: float = 0.0
    cum_minus: np.ndarray | None = None
    cum_plus: np.ndarray | None = None
    members_minus: np.ndarray | None = None
    members_plus: np.ndarray | None = None

    @property
    def count_minus(self) -> int:
        return int(self.counts[0])

    @property
    def count_plus(self) -> int:
        return int(self.counts[1])

    @property
    def n(self) -> int:
        return self.owner.size

    def susceptible(self) -> np.ndarray:
        return np.flatnonzero(self.owner == SUSCEPTIBLE)

    def check(self) -> None:
        """Disjointness and count bookkeeping (sets are disjoint by construction of owner)."""
        assert int((self.owner == MINUS_OWNED).sum()) == self.count_minus
        assert int((self.owner == PLUS_OWNED).sum()) == self.count_plus
        assert self.count_minus + self.count_plus <= self.n


@dataclass
class RunResult:
    n_minus: int
    n_plus: int
    t_cov: float
    checkpoints: list[tuple[float, int, int]] = field(default_factory=list)
    proposals: int = 0
    rejections: int = 0
    exact_steps: int = 0
    seed: int | None = None
    engine: str = "oracle"
    n: int = 0
    m: int = 0
    z: float = float("nan")
    c_n: float = float("nan")
    run_index: int = 0
    defect_minus_at_tn: int | None = None
    defect_plus_at_tn: int | None = None
    params: dict = field(default_factory=dict)

    @property
    def m_n(self) -> int:
        return min(self.n_minus, self.n_plus)

    def checkpoint(self, t: float) -> tuple[int, int]:
        for time, cm, cp in self.checkpoints:
            if time == t:
                return cm, cp
        raise KeyError(f"no checkpoint recorded at t={t}")


@njit(nogil=True, cache=True)
def disp_index(a, b, coords, strides, m):
    """Flat index of the displacement b - a."""
    idx = 0
    for i in range(coords.shape[1]):
        idx += ((coords[b, i] - coords[a, i]) % m) * strides[i]
    return idx


@njit(nogil=True, cache=True)
def _add_row(cum, v, kern, coords, strides, m):
    for w in range(cum.shape[0]):
        cum[w] += kern[disp_index(v, w, coords, strides, m)]


@njit(nogil=True, cache=True)
def _oracle_step(owner, cum_minus, cum_plus, lam, scale, rng):
    """Return (vertex, type, holding time) of the next infection."""
    n = owner.shape[0]
    total = 0.0
    for v in range(n):
        if owner[v] == 0:
            total += cum_minus[v] + lam * cum_plus[v]
    if total <= 0.0:
        return -1, 0, np.inf
    dt = rng.standard_exponential() / (total * scale)
    target = rng.random() * total
    acc = 0.0
    chosen = -1
    for v in range(n):
        if owner[v] == 0:
            acc += cum_minus[v] + lam * cum_plus[v]
            chosen = v
            if acc > target:
                break
    a = cum_minus[chosen]
    b = lam * cum_plus[chosen]
    kind = 1 if rng.random() * (a + b) < a else 2
    return chosen, kind, dt


@njit(nogil=True, cache=True)
def _oracle_apply(owner, counts, cum_minus, cum_plus, v, kind, kern_minus, kern_plus, coords, strides, m):
    owner[v] = kind
    counts[kind - 1] += 1
    if kind == 1:
        _add_row(cum_minus, v, kern_minus, coords, strides, m)
    else:
        _add_row(cum_plus, v, kern_plus, coords, strides, m)


@njit(nogil=True, cache=True)
def _oracle_run(coords, strides, m, kern_minus, kern_plus, lam, scale, src_minus, src_plus, ckpt, rng):
    n = coords.shape[0]
    owner = np.zeros(n, dtype=np.int8)
    counts = np.zeros(2, dtype=np.int64)
    cum_minus = np.zeros(n)
    cum_plus = np.zeros(n)
    _oracle_apply(owner, counts, cum_minus, cum_plus, src_minus, 1, kern_minus, kern_plus, coords, strides, m)
    _oracle_apply(owner, counts, cum_minus, cum_plus, src_plus, 2, kern_minus, kern_plus, coords, strides, m)
    snaps = np.empty((ckpt.shape[0], 2), dtype=np.int64)
    ci = 0
    t = 0.0
    while counts[0] + counts[1] < n:
        v, kind, dt = _oracle_step(owner, cum_minus, cum_plus, lam, scale, rng)
        t_new = t + dt
        while ci < ckpt.shape[0] and ckpt[ci] < t_new:
            snaps[ci, 0] = counts[0]
            snaps[ci, 1] = counts[1]
            ci += 1
        t = t_new
        _oracle_apply(owner, counts, cum_minus, cum_plus, v, kind, kern_minus, kern_plus, coords, strides, m)
    while ci < ckpt.shape[0]:
        snaps[ci, 0] = counts[0]
        snaps[ci, 1] = counts[1]
        ci += 1
    return counts[0], counts[1], t, snaps


@dataclass(frozen=True)
class OracleTables:
    coords: np.ndarray
    strides: np.ndarray
    m: int
    kern_minus: np.ndarray
    kern_plus: np.ndarray
    lam: float
    r_minus: float
    rates: RateSummary | None = None


def prepare_oracle(params: ModelParams, cap: int = ORACLE_CAP) -> OracleTables:
    spec = params.spec
    if spec.n > cap:
        raise OracleCapExceeded(f"n = {spec.n} exceeds the oracle cap {cap}; use the coupled engine")
    norms = displacement_norms(spec)
    a_minus, a_plus = params.alphas()
    kern_minus = np.zeros(spec.n)
    kern_plus = np.zeros(spec.n)
    kern_minus[1:] = norms[1:] ** (-a_minus)
    kern_plus[1:] = norms[1:] ** (-a_plus)
    return OracleTables(all_coords(spec), spec.strides, spec.m, kern_minus, kern_plus,
                        params.lambda_value(), math.fsum(kern_minus), total_rates(params))


def _prepare_checkpoints(times) -> tuple[np.ndarray, np.ndarray]:
    ckpt = np.asarray(list(times), dtype=float)
    order = np.argsort(ckpt, kind="stable")
    return ckpt[order], order


def _unsort_snaps(ckpt, order, snaps) -> list[tuple[float, int, int]]:
    out = [None] * len(order)
    for pos, idx in enumerate(order):
        out[idx] = (float(ckpt[pos]), int(snaps[pos, 0]), int(snaps[pos, 1]))
    return out


def initial_state(params: ModelParams, rng: np.random.Generator | None = None,
                  tables: OracleTables | None = None) -> InfectionState:
    """State at time 0 with the oracle caches filled in."""
    tables = tables or prepare_oracle(params)
    n = params.n
    state = InfectionState(np.zeros(n, dtype=np.int8), np.zeros(2, dtype=np.int64),
                           cum_minus=np.zeros(n), cum_plus=np.zeros(n))
    src_minus, src_plus = params.sources(rng)
    for v, kind in ((src_minus, 1), (src_plus, 2)):
        _oracle_apply(state.owner, state.counts, state.cum_minus, state.cum_plus, v, kind,
                      tables.kern_minus, tables.kern_plus, tables.coords, tables.strides, tables.m)
    return state


def state_from_sets(params: ModelParams, minus, plus, tables: OracleTables | None = None) -> InfectionState:
    """Oracle state with the given flat vertex sets already infected."""
    tables = tables or prepare_oracle(params)
    n = params.n
    state = InfectionState(np.zeros(n, dtype=np.int8), np.zeros(2, dtype=np.int64),
                           cum_minus=np.zeros(n), cum_plus=np.zeros(n))
    for kind, vs in ((1, minus), (2, plus)):
        for v in vs:
            if state.owner[v] != SUSCEPTIBLE:
                raise ValueError(f"vertex {v} listed twice")
            _oracle_apply(state.owner, state.counts, state.cum_minus, state.cum_plus, int(v), kind,
                          tables.kern_minus, tables.kern_plus, tables.coords, tables.strides, tables.m)
    return state


def gillespie_step(state: InfectionState, params: ModelParams, rates: RateSummary | None,
                   rng: np.random.Generator, tables: OracleTables | None = None,
                   time_scale: float = 1.0) -> tuple[tuple[int, int, float], InfectionState]:
    """Advance ``state`` in place by one infection; returns ((vertex, type, time), state).

    Rates are in rescaled units (divided by R_n^-); ``time_scale`` multiplies
    every rate by a common constant.
    """
    tables = tables or prepare_oracle(params)
    if not np.any(state.owner == SUSCEPTIBLE):
        raise ValueError("no susceptible vertex remains")
    r_minus = rates.r_minus if rates is not None else tables.r_minus
    v, kind, dt = _oracle_step(state.owner, state.cum_minus, state.cum_plus, tables.lam,
                               time_scale / r_minus, rng)
    _oracle_apply(state.owner, state.counts, state.cum_minus, state.cum_plus, v, kind,
                  tables.kern_minus, tables.kern_plus, tables.coords, tables.strides, tables.m)
    state.time += dt
    return (int(v), int(kind), state.time), state


def gillespie_run(params: ModelParams, seed, checkpoint_times=(), cap: int = ORACLE_CAP,
                  tables: OracleTables | None = None, time_scale: float = 1.0) -> RunResult:
    tables = tables or prepare_oracle(params, cap)
    rng = np.random.default_rng(seed)
    src_minus, src_plus = params.sources(rng)
    ckpt, order = _prepare_checkpoints(checkpoint_times)
    cm, cp, t, snaps = _oracle_run(tables.coords, tables.strides, tables.m, tables.kern_minus,
                                   tables.kern_plus, tables.lam, time_scale / tables.r_minus,
                                   src_minus, src_plus, ckpt, rng)
    rates = tables.rates or total_rates(params)
    return RunResult(int(cm), int(cp), float(t), _unsort_snaps(ckpt, order, snaps),
                     seed=seed if isinstance(seed, int) else None, engine="oracle",
                     n=params.n, m=params.spec.m, z=rates.z, c_n=rates.c, params=params.to_dict())
