"""Comparison detectors: Hotelling T^2 CUSUM, sliding-window MMD, adjacent-frame Wasserstein."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .tda.diagram import PersistenceDiagram
from .tda.distances import wasserstein1_distance


@dataclass(frozen=True)
class HotellingModel:
    """In-control mean, regularised inverse covariance, window and drift.

    The statistic at t averages frames t - window .. t, so ``window = 0``
    uses the current frame only.
    """

    mean: np.ndarray
    precision: np.ndarray
    window: int = 0
    drift: float = 0.0

    def __post_init__(self):
        if self.window < 0:
            raise ValueError("window must be nonnegative")
        if self.drift < 0:
            raise ValueError("drift must be nonnegative")
        P = np.asarray(self.precision, dtype=float)
        if not np.allclose(P, P.T, atol=1e-10 * max(1.0, np.abs(P).max())):
            raise ValueError("precision matrix must be symmetric")
        if np.linalg.eigvalsh(P).min() <= 0:
            raise ValueError("precision matrix must be positive definite")


def _as_vectors(stream) -> np.ndarray:
    X = np.asarray(stream, dtype=float)
    if X.ndim == 1:
        return X.reshape(-1, 1)
    return X.reshape(X.shape[0], -1)


def window_means(X, window: int) -> np.ndarray:
    """Mean of rows t - window .. t (truncated at the start) for every t."""
    X = _as_vectors(X)
    c = np.concatenate([np.zeros((1, X.shape[1])), np.cumsum(X, axis=0)])
    t = np.arange(1, X.shape[0] + 1)
    lo = np.maximum(t - window - 1, 0)
    return (c[t] - c[lo]) / (t - lo)[:, None]


def quadratic_forms(X, mean, precision, window: int = 0) -> np.ndarray:
    D = window_means(X, window) - mean
    return np.einsum("ti,ij,tj->t", D, precision, D)


def fit_hotelling(train, window: int = 0, drift: float | None = None, drift_quantile: float = 90.0,
                  regularize: bool = True, holdout=None) -> HotellingModel:
    """Mean and covariance from in-control vectors; drift from their quadratic forms.

    The covariance gets ``lambda I`` with ``lambda = 1e-6 trace / p`` unless
    ``regularize`` is False, in which case a singular covariance is an
    error. A zero covariance (constant training data) gets ``lambda = 1e-6``. The default drift is the ``drift_quantile`` percentile of the
    quadratic forms under the same window, taken on ``holdout`` when given
    and on the training vectors otherwise. In-sample forms run low when
    the vectors come from a PCA fit on the same frames.
    """
    X = _as_vectors(train)
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least two training vectors")
    mu = X.mean(axis=0)
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    if regularize:
        scale = np.trace(cov) / p
        cov = cov + 1e-6 * (scale if scale > 0 else 1.0) * np.eye(p)
    evals = np.linalg.eigvalsh(cov)
    if evals.min() <= 1e-12 * max(evals.max(), 1e-300):
        raise ValueError("covariance is singular; enable regularisation")
    precision = np.linalg.inv(cov)
    precision = 0.5 * (precision + precision.T)
    if drift is None:
        ref = X if holdout is None else _as_vectors(holdout)
        drift = float(np.percentile(quadratic_forms(ref, mu, precision, window), drift_quantile))
    return HotellingModel(mu, precision, window, drift)


def hotelling_cusum(stream, model: HotellingModel) -> np.ndarray:
    """CUSUM of drift-corrected quadratic forms, reported clipped at 0.

    The recursion S_t = max(S_{t-1}, 0) + q_t - drift is returned as
    max(S_t, 0), so an in-control stream sits at 0 and any positive
    threshold alarms at the same time as on the unclipped trace.
    """
    X = _as_vectors(stream)
    if X.shape[1] != model.mean.size:
        raise ValueError(f"stream dimension {X.shape[1]} != model dimension {model.mean.size}")
    q = quadratic_forms(X, model.mean, model.precision, model.window)
    S = np.empty(q.size)
    prev = 0.0
    for i, qi in enumerate(q):
        prev = max(prev + qi - model.drift, 0.0)
        S[i] = prev
    return S


def median_heuristic(samples) -> float:
    """Median pairwise Euclidean distance."""
    X = _as_vectors(samples)
    if X.shape[0] < 2:
        raise ValueError("median heuristic needs at least two samples")
    h = float(np.median(pdist(X)))
    if h <= 0:
        raise ValueError("median pairwise distance is zero")
    return h


def _canonical(X):
    return X[np.lexsort(X.T[::-1])] if X.shape[0] > 1 else X


def mmd_statistic(pre, post, bandwidth: float) -> float:
    """Biased (V-statistic) squared MMD with a Gaussian kernel.

    Rows are put in a canonical order first so that identical multisets
    give exactly 0 regardless of sample order.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    X, Y = _canonical(_as_vectors(pre)), _canonical(_as_vectors(post))
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise ValueError("both sample sets must be nonempty")
    g = -0.5 / bandwidth ** 2
    kxx = np.exp(g * cdist(X, X, "sqeuclidean")).mean()
    kyy = np.exp(g * cdist(Y, Y, "sqeuclidean")).mean()
    kxy = np.exp(g * cdist(X, Y, "sqeuclidean")).mean()
    return float(max(kxx + kyy - 2 * kxy, 0.0))


def mmd_from_distances(D, n_pre: int) -> float:
    """Block MMD from a pairwise distance matrix of pre rows followed by post rows.

    The bandwidth is the median off-diagonal distance; zero spread scores 0.
    """
    D = np.asarray(D, dtype=float)
    iu = np.triu_indices(D.shape[0], 1)
    h = float(np.median(D[iu])) if iu[0].size else 0.0
    if h <= 0:
        return 0.0
    K = np.exp(-0.5 * (D / h) ** 2)
    kxx = K[:n_pre, :n_pre].mean()
    kyy = K[n_pre:, n_pre:].mean()
    kxy = K[:n_pre, n_pre:].mean()
    return float(max(kxx + kyy - 2 * kxy, 0.0))


def mmd_detector(stream, window_pre: int = 40, window_post: int = 40) -> np.ndarray:
    """Sliding two-block MMD; each frame, flattened, is one sample.

    At time t the blocks are frames (t - w_pre - w_post, t - w_post] and
    (t - w_post, t], with the median-heuristic bandwidth of their union.
    Times without enough history are NaN. A block pair whose union has zero
    spread scores 0.
    """
    X = _as_vectors(stream)
    T = X.shape[0]
    out = np.full(T, np.nan)
    span = window_pre + window_post
    for t in range(span, T + 1):
        out[t - 1] = mmd_from_distances(squareform(pdist(X[t - span:t])), window_pre)
    return out


def wasserstein_detector(diagrams: Sequence[PersistenceDiagram], essential: str = "drop") -> np.ndarray:
    """W1 distance between each diagram and the next, S_t for t = 1..T-1.

    ``essential="drop"`` compares finite pairs only; ``"keep"`` matches
    essential classes too, which is infinite when their counts differ.
    """
    if len(diagrams) < 2:
        raise ValueError("need at least two diagrams for adjacent differences")
    ds = [d.finite() if essential == "drop" else d for d in diagrams]
    return np.array([wasserstein1_distance(ds[i], ds[i + 1]) for i in range(len(ds) - 1)])


def coefficient_of_variation(trace) -> float:
    x = np.asarray(trace, dtype=float)
    x = x[np.isfinite(x)]
    m = x.mean()
    return math.inf if m == 0 else float(x.std(ddof=1) / abs(m))
