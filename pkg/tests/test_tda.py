import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from percept.tda import (PersistenceDiagram, TiltedDiagram, bottleneck_distance, build_lower_star_filtration,
                         build_rips_filtration, compute_persistence, lower_star_persistence, rips_persistence,
                         same_multiset, tilt, wasserstein1_distance)
from percept.tda.filtration import pairwise_distances

from oracles import (brute_bottleneck, brute_force_pairs, brute_wasserstein1, diagram_triples,
                     union_find_components)


# filtrations ------------------------------------------------------------------


def test_rips_two_points():
    f = build_rips_filtration([[0, 0], [0.5, 0]], max_radius=1)
    assert f.count(0) == 2 and f.count(1) == 1
    assert list(f.values) == [0.0, 0.0, 0.5]


def test_rips_equilateral_triangle():
    pts = [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]]
    f = build_rips_filtration(pts, max_radius=2, max_dim=2)
    assert (f.count(0), f.count(1), f.count(2)) == (3, 3, 1)
    np.testing.assert_allclose(f.values[3:], 1.0, atol=1e-12)
    f.validate()


@pytest.mark.parametrize("eps", [0.05, 0.3, 0.8, 1.5, 2.0])
def test_rips_edge_count_matches_threshold_count(eps):
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, 100)
    pts = np.column_stack([np.cos(theta), np.sin(theta)])
    f = build_rips_filtration(pts, max_radius=eps, max_dim=1)
    brute = sum(1 for i in range(100) for j in range(i + 1, 100) if np.linalg.norm(pts[i] - pts[j]) <= eps)
    assert f.count(1) == brute


def test_rips_rejects_bad_input():
    with pytest.raises(ValueError):
        build_rips_filtration(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        build_rips_filtration([[0, np.nan]])
    with pytest.raises(ValueError):
        build_rips_filtration([[0, 0]], max_radius=0)


def test_lower_star_pair():
    f = build_lower_star_filtration([[3, 7]])
    assert sorted(f.values[f.dims == 0]) == [3, 7]
    assert list(f.values[f.dims == 1]) == [7]


def test_lower_star_constant_cell():
    f = build_lower_star_filtration(np.full((2, 2), 4.0))
    assert (f.count(0), f.count(1), f.count(2)) == (4, 5, 2)
    assert np.all(f.values == 4.0)


def test_lower_star_diagonal_is_top_left_to_bottom_right():
    f = build_lower_star_filtration(np.arange(4.0).reshape(2, 2))
    edges = {tuple(s[:2]) for s, k in zip(f.simplices, f.dims) if k == 1}
    assert (0, 3) in edges and (1, 2) not in edges


def test_lower_star_rejects_empty():
    with pytest.raises(ValueError):
        build_lower_star_filtration(np.zeros((0, 0)))


def _components_at(f, level):
    edges = [s for s, v in f.entries() if len(s) == 2 and v <= level]
    alive = [s[0] for s, v in f.entries() if len(s) == 1 and v <= level]
    index = {v: i for i, v in enumerate(alive)}
    return union_find_components(len(alive), [(index[a], index[b]) for a, b in edges])


def test_lower_star_saddle_merges_two_components():
    img = np.array([[0, 5, 9], [5, 3, 5], [9, 5, 0]], float)
    f = build_lower_star_filtration(img)
    assert _components_at(f, 2.9) == 2
    assert _components_at(f, 3.0) == 1
    d = lower_star_persistence(img).in_dim(0)
    alive = lambda e: int(np.sum((d.births <= e) & (e < d.deaths)))
    assert alive(2.9) == 2 and alive(3.0) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_filtration_invariant_holds(n, seed):
    pts = np.random.default_rng(seed).normal(size=(n, 2))
    build_rips_filtration(pts, max_radius=1.5).validate()
    build_lower_star_filtration(np.random.default_rng(seed).integers(0, 4, (3, 3))).validate()


# persistence ------------------------------------------------------------------


def test_single_point():
    d = compute_persistence(build_rips_filtration([[1.0, 2.0]]))
    assert diagram_triples(d) == [(0, 0.0, math.inf)]


def test_equilateral_triangle_diagram():
    pts = [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]]
    d = compute_persistence(build_rips_filtration(pts, max_radius=2))
    h0 = d.in_dim(0)
    assert len(d.in_dim(1)) == 0
    np.testing.assert_allclose(np.sort(h0.deaths), [1, 1, np.inf], atol=1e-12)


def test_unit_square_loop():
    pts = [[0, 0], [1, 0], [1, 1], [0, 1]]
    d = compute_persistence(build_rips_filtration(pts, max_radius=2))
    h1 = d.in_dim(1)
    assert len(h1) == 1
    np.testing.assert_allclose([h1.births[0], h1.deaths[0]], [1, math.sqrt(2)], atol=1e-12)
    assert same_multiset(d, rips_persistence(pts, max_radius=2), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(1, 3), st.integers(0, 10_000), st.sampled_from([0.7, 1.2, np.inf]))
def test_rips_matches_brute_force(n, d, seed, radius):
    pts = np.random.default_rng(seed).normal(size=(n, d))
    f = build_rips_filtration(pts, max_radius=radius)
    want = brute_force_pairs(list(f.entries()))
    assert diagram_triples(compute_persistence(f)) == want
    assert diagram_triples(rips_persistence(pts, max_radius=radius)) == want


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))
def test_lower_star_matches_brute_force(h, w, seed):
    img = np.random.default_rng(seed).integers(0, 5, (h, w)).astype(float)
    f = build_lower_star_filtration(img)
    assert diagram_triples(compute_persistence(f)) == brute_force_pairs(list(f.entries()))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10_000), st.floats(0.2, 2.0))
def test_h0_counts(n, seed, radius):
    pts = np.random.default_rng(seed).uniform(size=(n, 2)) * 3
    d = compute_persistence(build_rips_filtration(pts, max_radius=radius), include_zero=True)
    h0 = d.in_dim(0)
    assert len(h0) == n
    dist = pairwise_distances(pts)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if dist[i, j] <= radius]
    assert int(np.sum(np.isinf(h0.deaths))) == union_find_components(n, edges)


# tilting ------------------------------------------------------------------------


def test_tilt_examples():
    t = tilt(PersistenceDiagram.from_pairs([(0, 1)]))
    assert t.births.tolist() == [0] and t.persistence.tolist() == [1]
    t = tilt(PersistenceDiagram.from_pairs([(0.2, 0.9)]))
    np.testing.assert_allclose(t.persistence, [0.7])
    ess = PersistenceDiagram.from_pairs([(0, math.inf)])
    assert tilt(ess, 2.0).persistence.tolist() == [2.0]
    assert len(tilt(ess, "drop")) == 0


def test_tilt_cap_below_birth_raises():
    with pytest.raises(ValueError):
        tilt(PersistenceDiagram.from_pairs([(3, math.inf)]), 2.0)


def test_tilt_cap_uses_max_value():
    d = PersistenceDiagram.from_pairs([(0, math.inf), (0.5, 1.0)], max_value=4.0)
    t = tilt(d, "cap")
    assert sorted(t.persistence.tolist()) == [0.5, 4.0]


# distances -----------------------------------------------------------------------


def _random_diagram(rng, k):
    b = rng.uniform(0, 1, k)
    return np.column_stack([b, b + rng.uniform(0.01, 1, k)])


def test_distance_examples():
    d = PersistenceDiagram.from_pairs([(0, 1), (0.3, 0.8)])
    assert bottleneck_distance(d, d) == 0 and wasserstein1_distance(d, d) == 0
    one = PersistenceDiagram.from_pairs([(0, 1)])
    assert bottleneck_distance(one, PersistenceDiagram.empty()) == pytest.approx(0.5)
    assert bottleneck_distance(PersistenceDiagram.empty(), PersistenceDiagram.empty()) == 0
    assert wasserstein1_distance(PersistenceDiagram.empty(), PersistenceDiagram.empty()) == 0
    assert wasserstein1_distance(PersistenceDiagram.from_pairs([(0, 2)]), one) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 10_000))
def test_distances_match_enumeration(k1, k2, seed):
    rng = np.random.default_rng(seed)
    a, b = _random_diagram(rng, k1), _random_diagram(rng, k2)
    assert bottleneck_distance(a, b) == pytest.approx(brute_bottleneck(a, b), abs=1e-9)
    assert wasserstein1_distance(a, b) == pytest.approx(brute_wasserstein1(a, b), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_distance_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_random_diagram(rng, int(rng.integers(0, 7))) for _ in range(3))
    for dist in (bottleneck_distance, wasserstein1_distance):
        ab, ba = dist(a, b), dist(b, a)
        assert ab >= 0 and ab == pytest.approx(ba, abs=1e-12)
        assert dist(a, c) <= ab + dist(b, c) + 1e-9
        assert dist(a, a[rng.permutation(len(a))]) < 1e-9
    assert bottleneck_distance(a, b) <= wasserstein1_distance(a, b) + 1e-9


def test_distinct_diagrams_have_positive_distance():
    a = np.array([[0.0, 1.0]])
    b = np.array([[0.0, 1.0 + 1e-6]])
    assert bottleneck_distance(a, b) > 1e-9 and wasserstein1_distance(a, b) > 1e-9


def test_essential_count_mismatch_is_infinite():
    a = PersistenceDiagram.from_pairs([(0, math.inf)])
    b = PersistenceDiagram.from_pairs([(0, math.inf), (0.1, math.inf)])
    assert bottleneck_distance(a, b) == math.inf


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 25), st.integers(0, 10_000), st.floats(0.001, 0.1))
def test_stability_under_point_perturbation(n, seed, delta):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(n, 2))
    step = rng.normal(size=pts.shape)
    step *= delta * rng.uniform(size=(n, 1)) / np.linalg.norm(step, axis=1, keepdims=True)
    d1, d2 = rips_persistence(pts), rips_persistence(pts + step)
    assert bottleneck_distance(d1, d2) <= 2 * delta + 1e-9


def test_tilted_diagram_defaults_dims():
    t = TiltedDiagram([0.1, 0.2], [1.0, 2.0])
    assert t.dims.tolist() == [0, 0]
