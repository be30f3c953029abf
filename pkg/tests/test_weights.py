import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import null_space

from percept.binning import histogram_matrix
from percept.weights import (WeightProblem, estimate_distribution, optimize_weights, project_simplex,
                             select_bin_count, separation, worst_case_separation)
from percept.tda import TiltedDiagram


def restricted_min_eigenvalue(sigma):
    """Smallest eigenvalue of diag(sigma) on the sum-zero subspace."""
    B = null_space(np.ones((1, len(sigma))))
    return float(np.linalg.eigvalsh(B.T @ np.diag(sigma) @ B)[0])


def test_default_radius():
    assert WeightProblem(3).rho == 0.1


def test_problem_validation():
    with pytest.raises(ValueError):
        WeightProblem(1)
    with pytest.raises(ValueError):
        WeightProblem(3, rho=2.0)
    with pytest.raises(ValueError):
        WeightProblem(2, p_pre=np.array([0.2, 0.2]))


def test_constraint_at_all_ones_is_one():
    # max over the simplex of sum p_i^2 sits at a vertex
    L = 5
    vertices = [np.eye(L)[i] for i in range(L)]
    assert max(float(v @ v) for v in vertices) == 1.0
    inside = np.random.default_rng(0).dirichlet(np.ones(L), 2000)
    assert np.all((inside ** 2).sum(axis=1) <= 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_simplex_projection(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=int(rng.integers(2, 10))) * 3
    p = project_simplex(v)
    assert p.min() >= 0 and p.sum() == pytest.approx(1.0)
    # no simplex point is closer to v
    for q in rng.dirichlet(np.ones(v.size), 200):
        assert np.linalg.norm(v - p) <= np.linalg.norm(v - q) + 1e-12


@pytest.mark.parametrize("sigma", [[1, 1, 1], [0.2, 0.9, 0.5], [1, 0.3, 0.3, 0.8], [0.1, 1.0]])
def test_inner_problem_matches_eigenvalue_oracle(sigma):
    sigma = np.asarray(sigma, float)
    problem = WeightProblem(sigma.size, rho=0.1)
    f, p, q = worst_case_separation(sigma, problem, seed=0)
    assert f == pytest.approx(0.01 * restricted_min_eigenvalue(sigma), rel=1e-4)
    assert np.linalg.norm(p - q) >= 0.1 - 1e-9
    assert separation(p, q, sigma) == pytest.approx(f)


def test_symmetric_problem_gives_symmetric_weights():
    res = optimize_weights(WeightProblem(6), seed=1)
    assert res.sigma.max() - res.sigma.min() <= 0.05


def test_symmetric_maximiser_exists_on_grid():
    # among weight vectors on a coarse grid, a constant one attains the best worst case
    grid = [0.25, 0.5, 0.75, 1.0]
    scores = {s: 0.01 * restricted_min_eigenvalue(np.array(s)) for s in itertools.product(grid, repeat=3)}
    best = max(scores.values())
    assert scores[(1.0, 1.0, 1.0)] == pytest.approx(best)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["absolute", "relative"]), st.integers(2, 6))
def test_returned_weights_feasible_and_no_worse_than_uniform(seed, mode, L):
    rng = np.random.default_rng(seed)
    p_pre, p_post = rng.dirichlet(np.ones(L)), rng.dirichlet(np.ones(L))
    problem = WeightProblem(L, 0.1, mode, p_pre, p_post)
    res = optimize_weights(problem, seed=seed)
    assert res.sigma.min() >= 0 and res.sigma.max() <= 1 + 1e-9
    f_uniform = worst_case_separation(np.ones(L), problem, seed=seed)[0]
    assert res.objective >= f_uniform - 1e-6


def test_anchors_that_cannot_separate_raise():
    p = np.array([0.5, 0.5])
    problem = WeightProblem(2, rho=1.0, p_pre=p, p_post=p, anchor_radius=0.01)
    with pytest.raises(ValueError):
        worst_case_separation(np.ones(2), problem)


def test_optimisation_deterministic():
    problem = WeightProblem(4, p_pre=np.array([0.4, 0.3, 0.2, 0.1]), p_post=np.full(4, 0.25))
    a, b = optimize_weights(problem, seed=3), optimize_weights(problem, seed=3)
    assert a.objective == b.objective and np.array_equal(a.sigma, b.sigma)


def test_estimate_distribution():
    np.testing.assert_allclose(estimate_distribution([[1, 0], [1, 2]]), [0.5, 0.5])
    np.testing.assert_allclose(estimate_distribution(np.zeros((3, 4))), 0.25)


# bin count ---------------------------------------------------------------------


def _diagrams(rng, n, bump):
    out = []
    for _ in range(n):
        b = np.sort(rng.uniform(0, 1, 40))
        p = np.full(40, 0.1)
        if bump:
            p[(b >= 0.6) & (b < 0.7)] = 3.0
        out.append(TiltedDiagram(b, p))
    return out


def test_single_candidate():
    rng = np.random.default_rng(0)
    L, res, part, scores = select_bin_count([4], _diagrams(rng, 5, False), _diagrams(rng, 5, True))
    assert L == 4 and part.n_bins == 4 and set(scores) == {4}


def test_localized_change_prefers_isolating_bins():
    rng = np.random.default_rng(0)
    pre, post = _diagrams(rng, 20, False), _diagrams(rng, 20, True)
    L, res, part, scores = select_bin_count([2, 10], pre, post, seed=0)
    assert L == 10 and scores[10] > scores[2]
    # the bin that gains most mass covers the changed birth interval
    edges = np.concatenate([[0.0], part.breakpoints[0]])
    gain = estimate_distribution(histogram_matrix(post, part)) - estimate_distribution(histogram_matrix(pre, part))
    top = int(np.argmax(gain))
    assert edges[top] <= 0.65 < edges[top + 1]


def test_identical_training_data_ties_to_smallest():
    rng = np.random.default_rng(1)
    same = _diagrams(rng, 10, False)
    L, res, _, scores = select_bin_count([8, 2, 4], same, same, seed=0)
    assert L == 2
    for v in scores.values():
        assert v == pytest.approx(0.01, rel=1e-4)
