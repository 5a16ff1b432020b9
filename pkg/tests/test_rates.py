import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from lrcomp.alias import alias_pmf, build_alias
from lrcomp.rates import (ModelParams, ParamFamily, classify_regime, displacement_table,
                          limit_constant, partial_rate_sum, rate_sum_n, rates_at, total_rates)
from lrcomp.torus import TorusSpec

from conftest import brute_distance, brute_points


def equal(alpha, lam, d=1, m=5, p=2.0):
    a = ParamFamily.constant(alpha)
    return ModelParams(TorusSpec(d, m, p), a, a, lam)


def brute_rate(d, m, p, alpha, j=None):
    origin = (0,) * d
    dists = sorted(brute_distance(origin, v, m, p) for v in brute_points(d, m) if v != origin)
    return math.fsum(x ** -alpha for x in dists[:j])


def test_partial_rate_sum_examples():
    assert partial_rate_sum(4, 1.0, TorusSpec(1, 5)) == pytest.approx(3.0)
    assert partial_rate_sum(7, 0.0, TorusSpec(2, 4)) == 7
    assert partial_rate_sum(8, 1.0, TorusSpec(2, 5, math.inf)) == pytest.approx(8.0)


def test_partial_rate_sum_errors():
    with pytest.raises(ValueError):
        partial_rate_sum(0, 0.5, TorusSpec(1, 5))
    with pytest.raises(ValueError):
        partial_rate_sum(5, 0.5, TorusSpec(1, 5))
    with pytest.raises(ValueError):
        partial_rate_sum(3, -0.5, TorusSpec(1, 5))
    with pytest.raises(ValueError):
        rate_sum_n(10**7, 1.0, 1, 2.0)


def test_partial_sum_monotone_sweep():
    for d in (1, 2):
        for m in range(2, 8):
            for p in (1.0, 2.0, math.inf):
                spec = TorusSpec(d, m, p)
                alphas = (0.0, 0.3, 0.9 * d)
                for j in range(1, spec.n - 1):
                    vals = [partial_rate_sum(j, a, spec) for a in alphas]
                    assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))
                    for a in alphas:
                        assert partial_rate_sum(j + 1, a, spec) > partial_rate_sum(j, a, spec)


@pytest.mark.parametrize("d,m,p", [(1, 9, 2.0), (2, 6, 1.0), (2, 7, math.inf), (3, 4, 2.0)])
def test_partial_sum_matches_enumeration(d, m, p):
    spec = TorusSpec(d, m, p)
    for alpha in (0.0, 0.4, 0.8):
        for j in (1, spec.n // 2, spec.n - 1):
            assert partial_rate_sum(j, alpha, spec) == pytest.approx(brute_rate(d, m, p, alpha, j), rel=1e-12)


def test_total_rates_examples():
    r = total_rates(equal(0.0, ParamFamily.constant(2.0)))
    assert (r.r_minus, r.r_plus, r.z) == (4, 8, 2)
    assert r.c == pytest.approx(math.log(5))
    r = total_rates(equal(0.7, ParamFamily.constant(1.0), d=2, m=6))
    assert r.z == 1 and r.c == 0
    params = ModelParams(TorusSpec(1, 5), ParamFamily.constant(1.0), ParamFamily.constant(0.0),
                         enforce_alpha=False)
    r = total_rates(params)
    assert r.r_minus == pytest.approx(3) and r.r_plus == pytest.approx(4)
    assert r.z == pytest.approx(4 / 3)


def test_total_rates_does_not_force_z_above_one():
    assert total_rates(equal(0.0, ParamFamily.constant(0.5))).z == 0.5


def test_limit_constant_examples():
    assert limit_constant(0.0, 2, 2.0) == 1.0
    assert limit_constant(0.5, 1, 1.0) == pytest.approx(2 * math.sqrt(2), rel=1e-8)
    with pytest.raises(ValueError):
        limit_constant(2.0, 2, 2.0)


@pytest.mark.parametrize("alpha,d", [(1.0, 2), (2.5, 3), (0.3, 2), (1.2, 3)])
def test_limit_constant_sup_norm_closed_form(alpha, d):
    # for the sup norm the shells are cubes: 2^alpha d / (d - alpha)
    assert limit_constant(alpha, d, math.inf) == pytest.approx(2**alpha * d / (d - alpha), rel=1e-6)


@pytest.mark.parametrize("alpha,p", [(1.0, 2.0), (0.5, 1.0), (1.5, 2.0), (1.0, 3.0)])
def test_limit_constant_against_scipy(alpha, p):
    f = lambda y, x: (x**p + y**p) ** (-alpha / p)
    val, _ = integrate.dblquad(f, 0, 0.5, 0, 0.5, epsabs=1e-11, epsrel=1e-11)
    assert limit_constant(alpha, 2, p) == pytest.approx(4 * val, rel=1e-4)


def test_limit_constant_nondecreasing_in_alpha():
    for d, p in ((1, 2.0), (2, 2.0), (2, 1.0), (3, math.inf)):
        vals = [limit_constant(a, d, p) for a in np.linspace(0, 0.95 * d, 8)]
        assert all(y >= x for x, y in zip(vals, vals[1:]))


SANDWICH_GRID = [(d, m, p) for d in (1, 2) for m in range(2, 8) for p in (1.0, 2.0, math.inf)]


def _sandwich_ratios(alpha, d, m, p):
    spec = TorusSpec(d, m, p)
    lim = limit_constant(alpha, d, p)
    return [partial_rate_sum(j, alpha, spec) / j ** (1 - alpha / d) / lim for j in range(10, spec.n)]


@pytest.mark.parametrize("share", [0.3, 0.9])
def test_partial_sum_sandwich_half_to_double(share):
    # alpha = 0.3 and alpha = 0.9 d on the small-torus grid
    for d, m, p in SANDWICH_GRID:
        alpha = 0.3 if share == 0.3 else share * d
        for r in _sandwich_ratios(alpha, d, m, p):
            assert 0.5 <= r <= 2.0, (d, m, p, alpha, r)


@pytest.mark.parametrize("alpha_share", [0.15, 0.45, 0.9])
def test_partial_sum_sandwich_constants_stable(alpha_share):
    # measured constants: the ratio stays in a fixed positive band as j grows
    for d, m in ((1, 2000), (2, 45)):
        for p in (1.0, 2.0, math.inf):
            r = np.array(_sandwich_ratios(alpha_share * d, d, m, p))
            assert 0.15 < r.min() and r.max() < 1.5


def test_rate_convergence_improves():
    for alpha, d, p in ((1.0, 2, math.inf), (0.5, 1, 2.0), (1.0, 2, 2.0)):
        lim = limit_constant(alpha, d, p)
        err = [abs(rate_sum_n(n, alpha, d, p) / n ** (1 - alpha / d) - lim) for n in (10**3, 10**6)]
        assert err[1] < err[0]


@st.composite
def disjoint_sets(draw):
    d = draw(st.integers(1, 2))
    m = draw(st.integers(3, 6))
    p = draw(st.sampled_from([1.0, 2.0, math.inf]))
    alpha = draw(st.floats(0, 0.95 * d))
    n = m**d
    perm = draw(st.permutations(range(n)))
    ka = draw(st.integers(1, n - 1))
    kb = draw(st.integers(1, n - ka))
    return TorusSpec(d, m, p), alpha, perm[:ka], perm[ka:ka + kb]


@settings(max_examples=60, deadline=None)
@given(disjoint_sets())
def test_pair_sum_bounds(args):
    spec, alpha, a_idx, b_idx = args
    pts = brute_points(spec.d, spec.m)
    n = spec.n
    total = math.fsum(brute_distance(pts[a], pts[b], spec.m, spec.p) ** -alpha
                      for a in a_idx for b in b_idx)
    r = lambda j: partial_rate_sum(j, alpha, spec) if j > 0 else 0.0
    full = partial_rate_sum(n - 1, alpha, spec)
    na, nb = len(a_idx), len(b_idx)
    upper = min(na * r(nb), nb * r(na))
    # |B^c| counts the other n - |B| vertices, one of which is the point itself
    lower = max(na * (full - r(n - nb - 1)), nb * (full - r(n - na - 1)))
    assert total <= upper * (1 + 1e-12)
    assert total >= lower * (1 - 1e-12) - 1e-12


def test_classify_examples():
    assert classify_regime(equal(0.5, ParamFamily.constant(1.0))) == "coexistence"
    assert classify_regime(equal(0.5, ParamFamily("affine_log", {"a": 1.0, "b": 1.0}))) == "case-ii"
    assert classify_regime(equal(0.5, ParamFamily.constant(2.0))) == "case-iii"
    assert classify_regime(equal(0.5, ParamFamily("log_squared", {"a": 0.0, "b": 1.0}))) == "case-i"
    assert classify_regime(equal(0.0, ParamFamily.log_power(1.0, 1.0, -0.5))) == "case-iv"
    with pytest.raises(ValueError):
        classify_regime(equal(0.5, ParamFamily.constant(2.0)), [10, 100])


def test_rates_at_general_n():
    params = equal(0.5, ParamFamily.constant(2.0))
    r = rates_at(params, 1000)
    assert r.z == pytest.approx(2.0)
    # non-power n uses the n - 1 nearest points of the smallest covering torus
    spec = TorusSpec(1, 1000)
    assert rates_at(params, 1000).r_minus == pytest.approx(partial_rate_sum(999, 0.5, spec))


def test_displacement_table_examples():
    t = displacement_table(equal(0.0, ParamFamily.constant(1.0), d=2, m=4), "minus")
    np.testing.assert_allclose(t.probs[1:], 1 / 15)
    params = ModelParams(TorusSpec(1, 5), ParamFamily.constant(1.0), ParamFamily.constant(1.0),
                         enforce_alpha=False)
    t = displacement_table(params, "minus")
    # flat displacements 1..4 are +1, +2, -2, -1
    np.testing.assert_allclose(t.probs[1:], [1 / 3, 1 / 6, 1 / 6, 1 / 3], rtol=1e-12)


def test_displacement_table_unit_alpha_ratios():
    # alpha may not reach d = 1, so check the alpha = 1 weights on a 2-d torus instead
    params = ModelParams(TorusSpec(2, 5, 1.0), ParamFamily.constant(1.0), ParamFamily.constant(1.0))
    t = displacement_table(params, "plus")
    norms = np.array([brute_distance((0, 0), v, 5, 1.0) for v in brute_points(2, 5)])
    expect = np.zeros(25)
    expect[1:] = 1 / norms[1:]
    np.testing.assert_allclose(t.probs, expect / expect.sum(), rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 0.9])
def test_displacement_table_normalized_and_alias_exact(alpha):
    params = equal(alpha, ParamFamily.constant(3.0), d=2, m=6, p=2.0)
    for kind in ("minus", "plus"):
        t = displacement_table(params, kind)
        assert abs(t.probs.sum() - 1) < 1e-12
        assert t.probs[0] == 0
        np.testing.assert_allclose(alias_pmf(t.prob, t.alias), t.probs[1:], atol=1e-14)


def test_alias_sampling_frequencies(rng):
    w = np.array([5.0, 1.0, 0.0, 3.0, 1.0])
    prob, alias = build_alias(w)
    from lrcomp.alias import alias_draw
    counts = np.bincount([alias_draw(prob, alias, rng) for _ in range(50_000)], minlength=5)
    np.testing.assert_allclose(counts / counts.sum(), w / w.sum(), atol=0.01)
    assert counts[2] == 0
    with pytest.raises(ValueError):
        build_alias([0.0, 0.0])
    with pytest.raises(ValueError):
        build_alias([1.0, -1.0])


def test_family_evaluation_and_validation():
    n = 1000
    ln = math.log(n)
    assert ParamFamily.constant(2)(n) == 2
    assert ParamFamily("affine_log", {"a": 1, "b": 2})(n) == pytest.approx(1 + 2 * ln)
    assert ParamFamily("log_squared", {"a": 0, "b": 1})(n) == pytest.approx(ln**2)
    assert ParamFamily("power", {"a": 2, "b": 0.5})(n) == pytest.approx(2 * math.sqrt(n))
    assert ParamFamily.log_power(1, 1, -0.5)(n) == pytest.approx(1 + ln**-0.5)
    assert ParamFamily("table", {"values": {1000: 3.0}})(n) == 3.0
    with pytest.raises(ValueError):
        ParamFamily("table", {"values": {10: 3.0}})(n)
    with pytest.raises(ValueError):
        ParamFamily("cubic", {})
    with pytest.raises(ValueError):
        ParamFamily("constant", {"a": 1})


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(TorusSpec(1, 10), alpha_minus=ParamFamily.constant(1.0))
    with pytest.raises(ValueError):
        ModelParams(TorusSpec(1, 10), lam=ParamFamily.constant(0.0))
    with pytest.raises(ValueError):
        ModelParams(TorusSpec(1, 10), placement="explicit", source_minus=(3,), source_plus=(13,))
    p = ModelParams(TorusSpec(2, 10), placement="uniform-distinct")
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = p.sources(rng)
        assert a != b and 0 <= a < 100 and 0 <= b < 100
