"""Exact bottleneck and Wasserstein-1 distances between persistence diagrams."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .diagram import PersistenceDiagram


def _split(diagram, dim):
    """Finite (k, 2) points and sorted essential births for one dimension."""
    if isinstance(diagram, PersistenceDiagram):
        d = diagram if dim is None else diagram.in_dim(dim)
        pts = d.points()
    else:
        pts = np.asarray(diagram, dtype=float).reshape(-1, 2)
    finite = np.isfinite(pts[:, 1])
    return pts[finite], np.sort(pts[~finite, 0])


def _dims(d1, d2):
    dims = set()
    for d in (d1, d2):
        if isinstance(d, PersistenceDiagram):
            dims.update(int(x) for x in np.unique(d.dims))
    return sorted(dims)


def _per_dim(fn, d1, d2, dim, combine):
    if dim is None and (isinstance(d1, PersistenceDiagram) or isinstance(d2, PersistenceDiagram)):
        dims = _dims(d1, d2)
        if len(dims) > 1:
            return combine(fn(d1, d2, k) for k in dims)
        dim = dims[0] if dims else None
    return fn(d1, d2, dim)


def _feasible(C, da, db, c):
    n1, n2 = C.shape
    rows, cols = np.nonzero(C <= c)
    r = [rows, np.nonzero(da <= c)[0]]
    k = [cols, n2 + np.nonzero(da <= c)[0]]
    jb = np.nonzero(db <= c)[0]
    r.append(n1 + jb)
    k.append(jb)
    # diagonal slots match each other freely
    dr, dc = np.meshgrid(np.arange(n2), np.arange(n1), indexing="ij")
    r.append(n1 + dr.ravel())
    k.append(n2 + dc.ravel())
    r, k = np.concatenate(r), np.concatenate(k)
    n = n1 + n2
    graph = csr_matrix((np.ones(r.size, dtype=np.int8), (r, k)), shape=(n, n))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return np.all(match >= 0)


def _bottleneck_one(d1, d2, dim):
    a, ea = _split(d1, dim)
    b, eb = _split(d2, dim)
    if ea.size != eb.size:
        return math.inf
    ess = float(np.max(np.abs(ea - eb))) if ea.size else 0.0
    if a.shape[0] == 0 and b.shape[0] == 0:
        return ess
    C = np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2) if a.size and b.size else np.zeros((len(a), len(b)))
    da = (a[:, 1] - a[:, 0]) / 2
    db = (b[:, 1] - b[:, 0]) / 2
    candidates = np.unique(np.concatenate([[0.0], C.ravel(), da, db]))
    lo, hi = 0, candidates.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(C, da, db, candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(float(candidates[lo]), ess)


def bottleneck_distance(d1, d2, dim: int | None = None) -> float:
    """Bottleneck distance with L-infinity ground cost and diagonal matches.

    Diagrams may be :class:`PersistenceDiagram` objects or (k, 2) arrays of
    (birth, death). With several homology dimensions present and ``dim`` left
    as None, the maximum over dimensions is returned. Essential classes are
    matched among themselves; unequal essential counts give ``inf``.
    """
    return _per_dim(_bottleneck_one, d1, d2, dim, max)


def _wasserstein_one(d1, d2, dim):
    a, ea = _split(d1, dim)
    b, eb = _split(d2, dim)
    if ea.size != eb.size:
        return math.inf
    ess = float(np.sum(np.abs(ea - eb)))
    n1, n2 = len(a), len(b)
    if n1 == 0 and n2 == 0:
        return ess
    da = (a[:, 1] - a[:, 0]) / math.sqrt(2)
    db = (b[:, 1] - b[:, 0]) / math.sqrt(2)
    n = n1 + n2
    C = np.full((n, n), np.inf)
    if n1 and n2:
        C[:n1, :n2] = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    C[np.arange(n1), n2 + np.arange(n1)] = da
    C[n1 + np.arange(n2), np.arange(n2)] = db
    C[n1:, n2:] = 0.0
    rows, cols = linear_sum_assignment(C)
    return float(C[rows, cols].sum()) + ess


def wasserstein1_distance(d1, d2, dim: int | None = None) -> float:
    """Order-1 Wasserstein distance with a Euclidean ground metric.

    Each point may instead be sent to its orthogonal projection on the
    diagonal at cost ``(death - birth) / sqrt(2)``. Several dimensions are
    summed when ``dim`` is None.
    """
    return _per_dim(_wasserstein_one, d1, d2, dim, sum)
