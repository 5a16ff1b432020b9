"""Goodness-of-fit helpers: Pearson chi-square (one and two sample) and total variation."""
from __future__ import annotations

import numpy as np
from scipy.stats import chi2

SIGNIFICANCE = 0.01
MIN_BIN = 5


def histogram(values, support_min: int = 0) -> np.ndarray:
    """Counts of integer ``values`` on support_min, support_min+1, ... up to the max value."""
    v = np.asarray(values, dtype=np.int64) - support_min
    if v.size and v.min() < 0:
        raise ValueError("values below support_min")
    return np.bincount(v) if v.size else np.zeros(0, dtype=np.int64)


def _merge_bins(expected: np.ndarray, observed: np.ndarray, min_bin: float):
    """Greedy left-to-right merge until every bin expects at least ``min_bin``;
    a short remainder joins the last kept bin."""
    exp_out, obs_out = [], []
    e_acc = o_acc = 0.0
    for e, o in zip(expected, observed):
        e_acc += e
        o_acc += o
        if e_acc >= min_bin:
            exp_out.append(e_acc)
            obs_out.append(o_acc)
            e_acc = o_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_out:
            exp_out[-1] += e_acc
            obs_out[-1] += o_acc
        else:
            exp_out.append(e_acc)
            obs_out.append(o_acc)
    return np.array(exp_out), np.array(obs_out)


def chi_square_gof(counts, pmf, min_bin: float = MIN_BIN) -> tuple[float, float]:
    """Pearson test of ``counts`` (bin k is outcome k) against ``pmf``.

    ``pmf`` may be an array over the same bins or a callable k -> probability.
    Reference mass beyond the observed bins goes into the tail bin.
    """
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if counts.size == 0 or total == 0:
        raise ValueError("empty histogram")
    if total < 100:
        raise ValueError(f"need at least 100 observations, got {total:g}")
    if callable(pmf):
        probs = np.array([pmf(k) for k in range(counts.size)], dtype=float)
    else:
        probs = np.asarray(pmf, dtype=float)
        if probs.size < counts.size:
            probs = np.concatenate([probs, np.zeros(counts.size - probs.size)])
        elif probs.size > counts.size:
            counts = np.concatenate([counts, np.zeros(probs.size - counts.size)])
    if np.any(probs[counts > 0] == 0):
        return float("inf"), 0.0
    probs = probs.copy()
    probs[-1] += max(0.0, 1.0 - probs.sum())
    exp, obs = _merge_bins(probs * total, counts, min_bin)
    if exp.size < 2:
        return 0.0, 1.0
    stat = float(((obs - exp) ** 2 / exp).sum())
    return stat, float(chi2.sf(stat, exp.size - 1))


def chi_square_two_sample(counts_a, counts_b, min_bin: float = MIN_BIN) -> tuple[float, float]:
    """Homogeneity test of two histograms on a common integer support."""
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    k = max(a.size, b.size)
    a = np.pad(a, (0, k - a.size))
    b = np.pad(b, (0, k - b.size))
    na, nb = a.sum(), b.sum()
    if na == 0 or nb == 0:
        raise ValueError("empty histogram")
    # merge on the pooled expected count of the smaller sample
    pooled = (a + b) / (na + nb)
    keep_e, keep_a = _merge_bins(pooled * min(na, nb), a, min_bin)
    _, keep_b = _merge_bins(pooled * min(na, nb), b, min_bin)
    if keep_e.size < 2:
        return 0.0, 1.0
    tot = keep_a + keep_b
    ea = tot * na / (na + nb)
    eb = tot * nb / (na + nb)
    stat = float(((keep_a - ea) ** 2 / ea).sum() + ((keep_b - eb) ** 2 / eb).sum())
    return stat, float(chi2.sf(stat, keep_e.size - 1))


def tv_distance(empirical, reference) -> float:
    """Total variation between two pmfs on 0, 1, 2, ...

    ``reference`` may be a callable; its mass beyond the empirical support is
    counted as one lump (1 - covered mass).
    """
    emp = np.asarray(empirical, dtype=float)
    if abs(emp.sum() - 1.0) > 1e-9:
        raise ValueError(f"empirical pmf sums to {emp.sum()!r}")
    if callable(reference):
        ref = np.array([reference(k) for k in range(emp.size)], dtype=float)
        tail = max(0.0, 1.0 - ref.sum())
    else:
        ref = np.asarray(reference, dtype=float)
        if abs(ref.sum() - 1.0) > 1e-9:
            raise ValueError(f"reference pmf sums to {ref.sum()!r}")
        k = max(emp.size, ref.size)
        emp = np.pad(emp, (0, k - emp.size))
        ref = np.pad(ref, (0, k - ref.size))
        tail = 0.0
    return float(0.5 * (np.abs(emp - ref).sum() + tail))


def geometric_reference(p: float):
    """pmf on 0, 1, 2, ... of Geo(p) supported on {1, 2, ...}."""
    def pmf(k):
        return 0.0 if k < 1 else p * (1.0 - p) ** (k - 1)
    return pmf


def iqr(x) -> float:
    q1, q3 = np.percentile(np.asarray(x, dtype=float), [25, 75])
    return float(q3 - q1)
