"""Turning raw streams into per-frame geometry, and PCA for the Hotelling baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def takens_embed(series, window: int, t: int) -> np.ndarray:
    """Point cloud of the ``window`` cross-sections ending at index ``t``.

    ``series`` has one row per time step (0-based). Row ``t - window + 1``
    through row ``t`` are returned as points in R^d.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series.reshape(-1, 1)
    if window < 1:
        raise ValueError("window must be a positive integer")
    if t < window - 1:
        raise ValueError(f"need {window} steps of history at t={t}")
    if t >= series.shape[0]:
        raise IndexError(f"t={t} beyond series of length {series.shape[0]}")
    return series[t - window + 1: t + 1].copy()


def takens_stream(series, window: int) -> list[np.ndarray]:
    """Trailing-window point clouds for every t with full history."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series.reshape(-1, 1)
    return [takens_embed(series, window, t) for t in range(window - 1, series.shape[0])]


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (p, r), orthonormal columns
    variances: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[1]

    def project(self, frames) -> np.ndarray:
        X = _vectorize(frames)
        out = (X - self.mean) @ self.components
        return out[0] if np.ndim(frames) == 1 else out

    def reconstruct(self, scores) -> np.ndarray:
        return np.asarray(scores) @ self.components.T + self.mean


def _vectorize(frames) -> np.ndarray:
    X = np.asarray(frames, dtype=float)
    if X.ndim == 1:
        return X.reshape(1, -1)
    return X.reshape(X.shape[0], -1)


def fit_pca(frames, n_components: int) -> PcaModel:
    """Centered PCA from the eigendecomposition of the sample covariance.

    Frames of any shape are flattened to vectors first.
    """
    X = _vectorize(frames)
    n, p = X.shape
    if not 1 <= n_components <= min(p, n):
        raise ValueError(f"n_components={n_components} must be in [1, min(p={p}, n={n})]")
    mean = X.mean(axis=0)
    cov = np.cov(X - mean, rowvar=False, bias=False) if n > 1 else np.zeros((p, p))
    cov = np.atleast_2d(cov)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:n_components]
    comps = evecs[:, order]
    # fix the sign so results do not depend on the LAPACK build
    signs = np.sign(comps[np.argmax(np.abs(comps), axis=0), np.arange(n_components)])
    comps = comps * np.where(signs == 0, 1.0, signs)
    return PcaModel(mean, comps, np.maximum(evals[order], 0.0))
