"""Fast engine: infections as the original particles of two marked branching random walks.

Each original minus particle gives birth at rate 1 and each original plus
particle at rate Z_n (rescaled time); the child is displaced by a draw from
the parent's displacement distribution.  A child landing on a susceptible
vertex is original and infects it.  A child landing on an occupied vertex is
an artificial root; its whole subtree is artificial and never touches the
infection sets, so only its birth time is logged.  Defect sizes are rebuilt
afterwards from the log as sums of independent Yule sizes.

When many proposals in a row are rejected the engine does one exact step:
given the current state the time to the next infection is Exp(I) with I the
total infection rate, the infected vertex and its type follow the jump
chain, and the rejected proposals in that window are independent Poisson
streams (thinning), so their root times are drawn directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .alias import alias_draw
from .gillespie import InfectionState, RunResult, _prepare_checkpoints, _unsort_snaps, disp_index
from .rates import MINUS, ModelParams, RateSummary, _type_index, displacement_table, total_rates
from .torus import all_coords, from_flat
from .yule import geometric_sizes

STORM_FACTOR = 64.0


@dataclass
class DefectLog:
    """Birth times of artificial roots per type, nondecreasing."""

    roots_minus: np.ndarray = field(default_factory=lambda: np.empty(0))
    roots_plus: np.ndarray = field(default_factory=lambda: np.empty(0))
    capped_minus: bool = False
    capped_plus: bool = False

    def roots(self, kind) -> np.ndarray:
        return self.roots_minus if _type_index(kind) == MINUS else self.roots_plus


@dataclass(frozen=True)
class Proposal:
    parent_type: int  # 1 minus, 2 plus
    parent_location: tuple[int, ...]
    displacement: tuple[int, ...]
    outcome: str  # "infection" | "artificial-root"
    time: float = 0.0


@dataclass(frozen=True)
class CoupledTables:
    coords: np.ndarray
    strides: np.ndarray
    m: int
    probs_minus: np.ndarray
    prob_minus: np.ndarray
    alias_minus: np.ndarray
    probs_plus: np.ndarray
    prob_plus: np.ndarray
    alias_plus: np.ndarray
    rates: RateSummary


def prepare_coupled(params: ModelParams, rates: RateSummary | None = None) -> CoupledTables:
    tm = displacement_table(params, "minus")
    tp = displacement_table(params, "plus")
    rates = rates or total_rates(params)
    return CoupledTables(all_coords(params.spec), params.spec.strides, params.spec.m,
                         tm.probs, tm.prob, tm.alias, tp.probs, tp.prob, tp.alias, rates)


@njit(nogil=True, cache=True)
def _shift(parent, disp, coords, strides, m):
    idx = 0
    for i in range(coords.shape[1]):
        idx += ((coords[parent, i] + coords[disp, i]) % m) * strides[i]
    return idx


@njit(nogil=True, cache=True)
def _push(buf, k, value):
    if k == buf.shape[0]:
        bigger = np.empty(2 * buf.shape[0] + 16)
        bigger[:k] = buf[:k]
        buf = bigger
    buf[k] = value
    return buf


@njit(nogil=True, cache=True)
def _infect(owner, counts, members_minus, members_plus, v, kind):
    owner[v] = kind
    if kind == 1:
        members_minus[counts[0]] = v
    else:
        members_plus[counts[1]] = v
    counts[kind - 1] += 1


@njit(nogil=True, cache=True)
def _propose(owner, counts, members_minus, members_plus, coords, strides, m,
             prob_minus, alias_minus, prob_plus, alias_plus, z, rng):
    """One birth among the original particles; infects the target if it is free.

    Returns (dt, parent type, parent, displacement, target, accepted).
    """
    km = counts[0]
    kp = counts[1]
    rate = km + kp * z
    dt = rng.standard_exponential() / rate
    if rng.random() * rate < km:
        kind = 1
        parent = members_minus[rng.integers(0, km)]
        disp = 1 + alias_draw(prob_minus, alias_minus, rng)
    else:
        kind = 2
        parent = members_plus[rng.integers(0, kp)]
        disp = 1 + alias_draw(prob_plus, alias_plus, rng)
    target = _shift(parent, disp, coords, strides, m)
    accepted = owner[target] == 0
    if accepted:
        _infect(owner, counts, members_minus, members_plus, target, kind)
    return dt, kind, parent, disp, target, accepted


@njit(nogil=True, cache=True)
def _exact_step(owner, counts, members_minus, members_plus, coords, strides, m,
                probs_minus, probs_plus, z, rng, t, roots_minus, nrm, roots_plus, nrp):
    """Jump straight to the next infection; returns (t, nrm, nrp, roots_minus, roots_plus, rejected)."""
    n = owner.shape[0]
    km = counts[0]
    kp = counts[1]
    sus = np.empty(n - km - kp, dtype=np.int64)
    a = np.zeros(sus.shape[0])
    b = np.zeros(sus.shape[0])
    s = 0
    for v in range(n):
        if owner[v] == 0:
            sus[s] = v
            s += 1
    i_minus = 0.0
    i_plus = 0.0
    for j in range(sus.shape[0]):
        v = sus[j]
        for q in range(km):
            a[j] += probs_minus[disp_index(members_minus[q], v, coords, strides, m)]
        for q in range(kp):
            b[j] += probs_plus[disp_index(members_plus[q], v, coords, strides, m)]
        i_minus += a[j]
        i_plus += z * b[j]
    total = i_minus + i_plus
    wait = rng.standard_exponential() / total
    rej_minus = max(km - i_minus, 0.0) * wait
    rej_plus = max(kp * z - i_plus, 0.0) * wait
    k1 = rng.poisson(rej_minus) if rej_minus > 0 else 0
    times = np.sort(t + wait * rng.random(k1))
    for x in times:
        roots_minus = _push(roots_minus, nrm, x)
        nrm += 1
    k2 = rng.poisson(rej_plus) if rej_plus > 0 else 0
    times = np.sort(t + wait * rng.random(k2))
    for x in times:
        roots_plus = _push(roots_plus, nrp, x)
        nrp += 1
    t = t + wait
    target = rng.random() * total
    acc = 0.0
    chosen = sus.shape[0] - 1
    for j in range(sus.shape[0]):
        acc += a[j] + z * b[j]
        if acc > target:
            chosen = j
            break
    kind = 1 if rng.random() * (a[chosen] + z * b[chosen]) < a[chosen] else 2
    _infect(owner, counts, members_minus, members_plus, sus[chosen], kind)
    return t, nrm, nrp, roots_minus, roots_plus, k1 + k2


@njit(nogil=True, cache=True)
def _coupled_run(coords, strides, m, prob_minus, alias_minus, prob_plus, alias_plus,
                 probs_minus, probs_plus, z, src_minus, src_plus, ckpt, storm, rng):
    n = coords.shape[0]
    owner = np.zeros(n, dtype=np.int8)
    counts = np.zeros(2, dtype=np.int64)
    members_minus = np.empty(n, dtype=np.int64)
    members_plus = np.empty(n, dtype=np.int64)
    _infect(owner, counts, members_minus, members_plus, src_minus, 1)
    _infect(owner, counts, members_minus, members_plus, src_plus, 2)
    roots_minus = np.empty(64)
    roots_plus = np.empty(64)
    nrm = 0
    nrp = 0
    snaps = np.empty((ckpt.shape[0], 2), dtype=np.int64)
    ci = 0
    t = 0.0
    proposals = 0
    rejections = 0
    exact_steps = 0
    streak = 0
    while counts[0] + counts[1] < n:
        free = n - counts[0] - counts[1]
        if streak > storm * n / free:
            t_before = t
            km = counts[0]
            kp = counts[1]
            # checkpoints are flushed with the pre-infection counts inside the window
            t, nrm, nrp, roots_minus, roots_plus, rej = _exact_step(
                owner, counts, members_minus, members_plus, coords, strides, m,
                probs_minus, probs_plus, z, rng, t, roots_minus, nrm, roots_plus, nrp)
            while ci < ckpt.shape[0] and ckpt[ci] < t:
                snaps[ci, 0] = km
                snaps[ci, 1] = kp
                ci += 1
            proposals += rej + 1
            rejections += rej
            exact_steps += 1
            streak = 0
            continue
        km = counts[0]
        kp = counts[1]
        dt, kind, parent, disp, target, accepted = _propose(
            owner, counts, members_minus, members_plus, coords, strides, m,
            prob_minus, alias_minus, prob_plus, alias_plus, z, rng)
        t += dt
        proposals += 1
        if accepted:
            while ci < ckpt.shape[0] and ckpt[ci] < t:
                snaps[ci, 0] = km
                snaps[ci, 1] = kp
                ci += 1
            streak = 0
        else:
            rejections += 1
            streak += 1
            if kind == 1:
                roots_minus = _push(roots_minus, nrm, t)
                nrm += 1
            else:
                roots_plus = _push(roots_plus, nrp, t)
                nrp += 1
    while ci < ckpt.shape[0]:
        snaps[ci, 0] = counts[0]
        snaps[ci, 1] = counts[1]
        ci += 1
    return (counts[0], counts[1], t, snaps, roots_minus[:nrm].copy(), roots_plus[:nrp].copy(),
            proposals, rejections, exact_steps)


def phase_time(n: int, z: float, m: float) -> float:
    """t_n = (log n - m) / Z_n."""
    return (math.log(n) - m) / z


def coupled_run(params: ModelParams, seed, checkpoint_times=(), phase_m: float | None = None,
                tables: CoupledTables | None = None,
                storm_factor: float = STORM_FACTOR) -> tuple[RunResult, DefectLog]:
    tables = tables or prepare_coupled(params)
    rates = tables.rates
    times = list(checkpoint_times)
    if phase_m is not None:
        times.append(phase_time(params.n, rates.z, phase_m))
    rng = np.random.default_rng(seed)
    src_minus, src_plus = params.sources(rng)
    ckpt, order = _prepare_checkpoints(times)
    cm, cp, t, snaps, rm, rp, props, rejs, exact = _coupled_run(
        tables.coords, tables.strides, tables.m, tables.prob_minus, tables.alias_minus,
        tables.prob_plus, tables.alias_plus, tables.probs_minus, tables.probs_plus,
        rates.z, src_minus, src_plus, ckpt, float(storm_factor), rng)
    result = RunResult(int(cm), int(cp), float(t), _unsort_snaps(ckpt, order, snaps),
                       proposals=int(props), rejections=int(rejs), exact_steps=int(exact),
                       seed=seed if isinstance(seed, int) else None, engine="coupled",
                       n=params.n, m=params.spec.m, z=rates.z, c_n=rates.c, params=params.to_dict())
    return result, DefectLog(rm, rp)


def coupled_state_from_sets(params: ModelParams, minus, plus) -> InfectionState:
    """State with the given flat vertex sets infected (original particles)."""
    n = params.n
    state = InfectionState(np.zeros(n, dtype=np.int8), np.zeros(2, dtype=np.int64),
                           members_minus=np.empty(n, dtype=np.int64),
                           members_plus=np.empty(n, dtype=np.int64))
    for kind, vs in ((1, minus), (2, plus)):
        for v in vs:
            if state.owner[v] != 0:
                raise ValueError(f"vertex {v} listed twice")
            _infect(state.owner, state.counts, state.members_minus, state.members_plus, int(v), kind)
    return state


def initial_coupled_state(params: ModelParams, rng: np.random.Generator | None = None) -> InfectionState:
    src_minus, src_plus = params.sources(rng)
    return coupled_state_from_sets(params, [src_minus], [src_plus])


def propose(state: InfectionState, tables: CoupledTables, rates: RateSummary | None,
            rng: np.random.Generator, log: DefectLog | None = None) -> Proposal:
    """Single proposal; updates ``state`` (and ``log`` on rejection) in place."""
    if state.counts.sum() == 0:
        raise ValueError("no infected vertex to give birth")
    z = (rates or tables.rates).z
    dt, kind, parent, disp, target, accepted = _propose(
        state.owner, state.counts, state.members_minus, state.members_plus,
        tables.coords, tables.strides, tables.m, tables.prob_minus, tables.alias_minus,
        tables.prob_plus, tables.alias_plus, z, rng)
    state.time += dt
    if not accepted and log is not None:
        if kind == 1:
            log.roots_minus = np.append(log.roots_minus, state.time)
        else:
            log.roots_plus = np.append(log.roots_plus, state.time)
    return Proposal(int(kind), tuple(int(c) for c in tables.coords[parent]),
                    tuple(int(c) for c in tables.coords[disp]),
                    "infection" if accepted else "artificial-root", state.time)


def defect_size(log: DefectLog, t: float, kind, rates: RateSummary, rng: np.random.Generator) -> int:
    """One draw of |D(t)|: each root born by t contributes an independent Yule size at its age."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    roots = log.roots(kind)
    sigma = 1.0 if _type_index(kind) == MINUS else rates.z
    ages = t - roots[roots <= t]
    if ages.size == 0:
        return 0
    return int(geometric_sizes(ages, sigma, rng).sum())
