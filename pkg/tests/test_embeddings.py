import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from percept.embeddings import fit_pca, takens_embed, takens_stream
from percept.tda import rips_persistence


def test_window_of_one():
    z = np.arange(12.0).reshape(6, 2)
    np.testing.assert_array_equal(takens_embed(z, 1, 4), z[[4]])


def test_trailing_window_index_arithmetic():
    z = np.array([[1.0], [2.0], [3.0], [4.0]])
    # time 4 in 1-based terms is row 3
    np.testing.assert_array_equal(takens_embed(z, 3, 3).ravel(), [2, 3, 4])


def test_insufficient_history():
    with pytest.raises(ValueError):
        takens_embed(np.zeros((5, 1)), 3, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 20), st.integers(0, 10))
def test_window_size_and_shift(w, t, shift):
    z = np.random.default_rng(t).normal(size=(40, 2))
    t = t + w - 1
    pc = takens_embed(z, w, t)
    assert pc.shape == (w, 2)
    np.testing.assert_array_equal(takens_embed(np.roll(z, shift, axis=0), w, t + shift), pc)


def test_stream_covers_every_full_window():
    z = np.arange(10.0)
    clouds = takens_stream(z, 4)
    assert len(clouds) == 7
    np.testing.assert_array_equal(clouds[-1].ravel(), [6, 7, 8, 9])


def test_periodic_window_has_one_dominant_loop():
    period = 40
    s = np.sin(2 * np.pi * np.arange(200) / period)
    lift = np.column_stack([s[:-10], s[10:]])  # quarter-period delay
    pc = takens_embed(lift, period, 100)
    h1 = rips_persistence(pc).in_dim(1)
    pers = np.sort(h1.persistence)[::-1]
    assert pers.size >= 1
    second = pers[1] if pers.size > 1 else 0.0
    assert pers[0] >= 3 * second


def test_pca_full_rank_reconstruction():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    X -= X.mean(axis=0)
    model = fit_pca(X, 3)
    np.testing.assert_allclose(model.reconstruct(model.project(X)), X, atol=1e-8)
    np.testing.assert_allclose(model.components.T @ model.components, np.eye(3), atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_pca_variances_nonincreasing(seed, r):
    X = np.random.default_rng(seed).normal(size=(30, 6)) * np.arange(1, 7)
    model = fit_pca(X, r)
    v = model.project(X).var(axis=0, ddof=1)
    assert np.all(np.diff(v) <= 1e-9)
    np.testing.assert_allclose(v, model.variances, rtol=1e-8)


def test_pca_flattens_frames():
    frames = np.random.default_rng(1).normal(size=(20, 5, 2))
    assert fit_pca(frames, 4).project(frames).shape == (20, 4)


def test_pca_rejects_too_many_components():
    with pytest.raises(ValueError):
        fit_pca(np.zeros((5, 3)), 4)
    with pytest.raises(ValueError):
        fit_pca(np.zeros((2, 10)), 3)
