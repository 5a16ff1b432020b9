import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrcomp.torus import (TorusSpec, all_coords, antipode, displacement_norms, from_flat,
                          nearest_nonzero, to_flat, torus_distance, wrap)

from conftest import brute_distance, brute_points

NORMS = [1.0, 1.5, 2.0, math.inf]


def test_wrap_examples():
    assert wrap((7,), TorusSpec(1, 5)) == (2,)
    assert wrap((0, 0), TorusSpec(2, 5)) == (0, 0)
    assert wrap((-1, 5), TorusSpec(2, 5)) == (4, 0)


def test_wrap_dimension_mismatch():
    with pytest.raises(ValueError):
        wrap((1, 2), TorusSpec(1, 5))


@given(st.integers(1, 3), st.integers(2, 9), st.data())
def test_wrap_idempotent_and_canonical(d, m, data):
    spec = TorusSpec(d, m)
    raw = data.draw(st.tuples(*[st.integers(-100, 100)] * d))
    w = wrap(raw, spec)
    assert wrap(w, spec) == w
    assert all(0 <= c < m for c in w)


def test_spec_validation():
    assert TorusSpec(3, 4).n == 64
    with pytest.raises(ValueError):
        TorusSpec(1, 1)
    with pytest.raises(ValueError):
        TorusSpec(0, 4)
    with pytest.raises(ValueError):
        TorusSpec(2, 4, p=0.5)


def test_distance_examples():
    assert torus_distance((0,), (4,), TorusSpec(1, 5, 1)) == 1
    assert torus_distance((0, 0), (3, 4), TorusSpec(2, 5, 1)) == 3
    assert torus_distance((0, 0), (2, 2), TorusSpec(2, 4, math.inf)) == 2


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        torus_distance((0,), (1, 1), TorusSpec(2, 5))


@st.composite
def point_triples(draw):
    d = draw(st.integers(1, 3))
    m = draw(st.integers(2, 8))
    p = draw(st.sampled_from(NORMS))
    pt = st.tuples(*[st.integers(0, m - 1)] * d)
    return TorusSpec(d, m, p), draw(pt), draw(pt), draw(pt)


@given(point_triples())
def test_distance_metric_properties(args):
    spec, u, v, w = args
    duv = torus_distance(u, v, spec)
    assert duv == torus_distance(v, u, spec)
    assert torus_distance(u, u, spec) == 0
    assert (duv > 0) == (u != v)
    shifted = torus_distance(wrap(np.add(u, w), spec), wrap(np.add(v, w), spec), spec)
    assert shifted == pytest.approx(duv, rel=1e-12)
    assert duv == pytest.approx(brute_distance(u, v, spec.m, spec.p), rel=1e-12)


@pytest.mark.parametrize("p", NORMS)
def test_distance_upper_bound_sweep(p):
    for d in (1, 2, 3):
        for m in range(2, 7):
            spec = TorusSpec(d, m, p)
            bound = m / 2 if math.isinf(p) else d ** (1 / p) * m / 2
            assert displacement_norms(spec).max() <= bound + 1e-12


def test_flat_roundtrip_and_coords():
    spec = TorusSpec(3, 4)
    coords = all_coords(spec)
    for i in range(spec.n):
        assert to_flat(from_flat(i, spec), spec) == i
        assert tuple(coords[i]) == from_flat(i, spec)
    with pytest.raises(ValueError):
        from_flat(spec.n, spec)
    assert antipode(spec) == (2, 2, 2)


def test_nearest_examples():
    got = nearest_nonzero(TorusSpec(1, 5), 4)
    assert [dist for _, dist in got] == [1, 1, 2, 2]
    got = nearest_nonzero(TorusSpec(2, 3, 1), 4)
    assert [dist for _, dist in got] == [1, 1, 1, 1]
    got = nearest_nonzero(TorusSpec(2, 5, math.inf), 8)
    assert [dist for _, dist in got] == [1.0] * 8
    # tie-break is lexicographic
    assert [pt for pt, _ in nearest_nonzero(TorusSpec(1, 5), 2)] == [(1,), (4,)]


def test_nearest_range_errors():
    with pytest.raises(ValueError):
        nearest_nonzero(TorusSpec(1, 5), 0)
    with pytest.raises(ValueError):
        nearest_nonzero(TorusSpec(1, 5), 5)


@pytest.mark.parametrize("p", NORMS)
def test_nearest_matches_brute_force(p):
    for d in (1, 2, 3):
        for m in range(2, 8):
            spec = TorusSpec(d, m, p)
            origin = (0,) * d
            brute = sorted(brute_distance(origin, v, m, p) for v in brute_points(d, m) if v != origin)
            got = nearest_nonzero(spec, spec.n - 1)
            dists = [x for _, x in got]
            assert all(a <= b for a, b in zip(dists, dists[1:]))
            np.testing.assert_allclose(dists, brute, rtol=1e-12)
