"""Persistent homology in dimensions 0 and 1.

H0 pairs come from a union-find sweep over the edges (the elder rule, which
is what reducing the edge columns of the boundary matrix produces). H1 pairs
come from reducing the coboundary columns of the positive edges in reverse
filtration order, with H0-negative edges cleared up front. Pairs of a
boundary matrix and of its anti-transpose coincide, so the result is the
standard persistence pairing.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from numba.typed import List

from .diagram import PersistenceDiagram
from .filtration import Filtration, build_lower_star_filtration, pairwise_distances


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _union_find_pairs(n_vertices, vertex_rank, eu, ev):
    """Sweep edges in order; return (dying vertex or -1 per edge, roots)."""
    parent = np.arange(n_vertices)
    oldest = np.arange(n_vertices)
    killed = np.full(eu.size, -1, dtype=np.int64)
    for e in range(eu.size):
        ru = _find(parent, eu[e])
        rv = _find(parent, ev[e])
        if ru == rv:
            continue
        ou, ov = oldest[ru], oldest[rv]
        if vertex_rank[ou] < vertex_rank[ov]:
            killed[e] = ov
            parent[rv] = ru
        else:
            killed[e] = ou
            parent[ru] = rv
    is_root = np.zeros(n_vertices, dtype=np.bool_)
    for v in range(n_vertices):
        is_root[_find(parent, v)] = True
    roots = np.nonzero(is_root)[0]
    out = np.empty(roots.size, dtype=np.int64)
    for i in range(roots.size):
        out[i] = oldest[roots[i]]
    return killed, out


@njit(cache=True)
def _symdiff(a, b):
    out = np.empty(a.size + b.size, dtype=np.int64)
    i = j = n = 0
    while i < a.size and j < b.size:
        if a[i] < b[j]:
            out[n] = a[i]
            i += 1
            n += 1
        elif b[j] < a[i]:
            out[n] = b[j]
            j += 1
            n += 1
        else:
            i += 1
            j += 1
    while i < a.size:
        out[n] = a[i]
        i += 1
        n += 1
    while j < b.size:
        out[n] = b[j]
        j += 1
        n += 1
    return out[:n]


@njit(cache=True)
def _reduce_coboundary(indptr, indices, columns, n_tri):
    """Reduce explicit coboundary columns (triangle ordinals, ascending).

    ``columns`` lists edge ordinals in processing (descending) order.
    Returns the pivot triangle per processed column, -1 for a zero column.
    """
    owner = np.full(n_tri, -1, dtype=np.int64)
    store = List()
    store.append(np.zeros(0, dtype=np.int64))
    pivots = np.full(columns.size, -1, dtype=np.int64)
    for c in range(columns.size):
        e = columns[c]
        col = indices[indptr[e]:indptr[e + 1]].copy()
        while col.size > 0 and owner[col[0]] >= 0:
            col = _symdiff(col, store[owner[col[0]]])
        if col.size > 0:
            owner[col[0]] = len(store)
            store.append(col)
            pivots[c] = col[0]
    return pivots


def _edge_lookup(filtration: Filtration):
    order = filtration.dims == 1
    edges = filtration.simplices[order, :2]
    return edges, np.nonzero(order)[0]


def compute_persistence(filtration: Filtration, include_zero: bool = False) -> PersistenceDiagram:
    """Persistence pairs of ``filtration`` in dimensions 0 and 1.

    Pairs with ``death == birth`` are omitted unless ``include_zero``.
    Essential classes are reported with ``death = inf``.
    """
    n = filtration.n_vertices
    dims, values = filtration.dims, filtration.values
    vmask = dims == 0
    vpos = np.empty(n, dtype=np.int64)
    vpos[filtration.simplices[vmask, 0]] = np.nonzero(vmask)[0]
    vvalue = np.empty(n)
    vvalue[filtration.simplices[vmask, 0]] = values[vmask]

    edges, epos = _edge_lookup(filtration)
    evalue = values[epos]
    killed, roots = _union_find_pairs(
        n, vpos, np.ascontiguousarray(edges[:, 0]), np.ascontiguousarray(edges[:, 1])
    )

    births, deaths, hdims = [], [], []
    neg = killed >= 0
    births.append(vvalue[killed[neg]])
    deaths.append(evalue[neg])
    hdims.append(np.zeros(int(neg.sum()), dtype=int))
    births.append(vvalue[roots])
    deaths.append(np.full(roots.size, math.inf))
    hdims.append(np.zeros(roots.size, dtype=int))

    tmask = dims == 2
    n_tri = int(tmask.sum())
    positive = np.nonzero(~neg)[0]
    if positive.size:
        if n_tri:
            tris = filtration.simplices[tmask]
            tvalue = values[tmask]
            keys = edges[:, 0].astype(np.int64) * n + edges[:, 1]
            key_order = np.argsort(keys)
            faces = np.concatenate([tris[:, [0, 1]], tris[:, [0, 2]], tris[:, [1, 2]]])
            fkeys = faces[:, 0].astype(np.int64) * n + faces[:, 1]
            loc = np.searchsorted(keys[key_order], fkeys)
            face_edge = key_order[loc]
            face_tri = np.tile(np.arange(n_tri, dtype=np.int64), 3)
            srt = np.lexsort((face_tri, face_edge))
            indices = face_tri[srt]
            indptr = np.zeros(len(edges) + 1, dtype=np.int64)
            np.cumsum(np.bincount(face_edge, minlength=len(edges)), out=indptr[1:])
        else:
            tvalue = np.zeros(0)
            indices = np.zeros(0, dtype=np.int64)
            indptr = np.zeros(len(edges) + 1, dtype=np.int64)
        columns = positive[::-1].astype(np.int64)
        pivots = _reduce_coboundary(indptr, indices, columns, max(n_tri, 1))
        paired = pivots >= 0
        births.append(evalue[columns])
        deaths.append(np.where(paired, tvalue[np.maximum(pivots, 0)] if n_tri else math.inf, math.inf))
        hdims.append(np.ones(columns.size, dtype=int))

    b = np.concatenate(births)
    d = np.concatenate(deaths)
    k = np.concatenate(hdims)
    if not include_zero:
        keep = d > b
        b, d, k = b[keep], d[keep], k[keep]
    return PersistenceDiagram(b, d, k, filtration.max_value).sorted()


@njit(cache=True)
def _lex_less(va, ca, vb, cb):
    return va < vb or (va == vb and ca < cb)


@njit(cache=True)
def _symdiff_keyed(va, ca, vb, cb):
    nv = np.empty(va.size + vb.size)
    nc = np.empty(va.size + vb.size, dtype=np.int64)
    i = j = n = 0
    while i < va.size and j < vb.size:
        if ca[i] == cb[j]:
            i += 1
            j += 1
        elif _lex_less(va[i], ca[i], vb[j], cb[j]):
            nv[n] = va[i]
            nc[n] = ca[i]
            i += 1
            n += 1
        else:
            nv[n] = vb[j]
            nc[n] = cb[j]
            j += 1
            n += 1
    while i < va.size:
        nv[n] = va[i]
        nc[n] = ca[i]
        i += 1
        n += 1
    while j < vb.size:
        nv[n] = vb[j]
        nc[n] = cb[j]
        j += 1
        n += 1
    return nv[:n], nc[:n]


@njit(cache=True)
def _tri_code(i, j, k, n):
    if k < i:
        return k * n * n + i * n + j
    if k < j:
        return i * n * n + k * n + j
    return i * n * n + j * n + k


@njit(cache=True)
def _rips_coboundary(dist, i, j, dij, max_radius, vals, codes):
    n = dist.shape[0]
    m = 0
    for k in range(n):
        if k == i or k == j:
            continue
        v = max(dij, dist[i, k], dist[j, k])
        if v <= max_radius:
            vals[m] = v
            codes[m] = _tri_code(i, j, k, n)
            m += 1
    # codes ascend with k, so a stable sort on value gives (value, code) order
    order = np.argsort(vals[:m], kind="mergesort")
    return vals[:m][order], codes[:m][order]


@njit(cache=True)
def _is_apparent(dist, i, j, dij, k):
    """True when edge (i, j) is the last facet of triangle (i, j, k)."""
    n = dist.shape[0]
    ecode = i * n + j
    a, b = min(i, k), max(i, k)
    if dist[a, b] > dij or (dist[a, b] == dij and a * n + b > ecode):
        return False
    a, b = min(j, k), max(j, k)
    if dist[a, b] > dij or (dist[a, b] == dij and a * n + b > ecode):
        return False
    return True


@njit(cache=True)
def _rips_h1(dist, eu, ev, ew, positive, max_radius):
    """Coboundary reduction over implicit Rips triangles.

    Triangles are keyed by (diameter, a*n*n + b*n + c) for a < b < c, which
    is the same total order the explicit filtration uses. Apparent pairs are
    recorded without building their column; such columns are materialised
    only if a later column needs them.
    """
    n = dist.shape[0]
    owner = dict()
    owner[np.int64(-1)] = np.int64(0)
    store_v = List()
    store_c = List()
    store_v.append(np.zeros(0))
    store_c.append(np.zeros(0, dtype=np.int64))
    deaths = np.full(eu.size, np.inf)
    vals = np.empty(n)
    codes = np.empty(n, dtype=np.int64)
    for e in range(eu.size - 1, -1, -1):
        if not positive[e]:
            continue
        i, j, dij = eu[e], ev[e], ew[e]
        best_v = np.inf
        best_c = np.int64(-1)
        best_k = -1
        for k in range(n):
            if k == i or k == j:
                continue
            v = max(dij, dist[i, k], dist[j, k])
            if v <= max_radius:
                c = _tri_code(i, j, k, n)
                if v < best_v or (v == best_v and c < best_c):
                    best_v, best_c, best_k = v, c, k
        if best_k < 0:
            continue
        if best_v == dij and _is_apparent(dist, i, j, dij, best_k):
            # negative slot id marks a lazily built column for edge e
            owner[best_c] = -np.int64(e) - 1
            deaths[e] = best_v
            continue
        cv, cc = _rips_coboundary(dist, i, j, dij, max_radius, vals, codes)
        while cc.size > 0 and cc[0] in owner:
            slot = owner[cc[0]]
            if slot < 0:
                f = -slot - 1
                sv, sc = _rips_coboundary(dist, eu[f], ev[f], ew[f], max_radius, vals, codes)
                slot = np.int64(len(store_v))
                store_v.append(sv)
                store_c.append(sc)
                owner[cc[0]] = slot
            cv, cc = _symdiff_keyed(cv, cc, store_v[slot], store_c[slot])
        if cc.size > 0:
            owner[cc[0]] = np.int64(len(store_v))
            store_v.append(cv)
            store_c.append(cc)
            deaths[e] = cv[0]
    return deaths


def rips_persistence(points, max_radius: float = np.inf, max_dim: int = 2,
                     include_zero: bool = False) -> PersistenceDiagram:
    """Rips persistence without materialising the triangle list.

    Produces the same diagram as
    ``compute_persistence(build_rips_filtration(points, max_radius, max_dim))``.
    ``max_dim=0`` skips H1 entirely.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] == 0:
        raise ValueError("point cloud is empty")
    if not np.all(np.isfinite(points)):
        raise ValueError("point cloud has non-finite coordinates")
    n = points.shape[0]
    dist = pairwise_distances(points)
    i, j = np.triu_indices(n, k=1)
    w = dist[i, j]
    keep = w <= max_radius
    i, j, w = i[keep], j[keep], w[keep]
    order = np.lexsort((j, i, w))
    eu, ev, ew = i[order].astype(np.int64), j[order].astype(np.int64), w[order]
    killed, roots = _union_find_pairs(n, np.arange(n, dtype=np.int64), eu, ev)
    neg = killed >= 0
    births = [np.zeros(int(neg.sum())), np.zeros(roots.size)]
    deaths = [ew[neg], np.full(roots.size, math.inf)]
    dims = [np.zeros(int(neg.sum()), int), np.zeros(roots.size, int)]
    if max_dim >= 1:
        positive = ~neg
        if max_dim >= 2:
            h1_death = _rips_h1(dist, eu, ev, ew, positive, float(max_radius))
        else:
            h1_death = np.full(ew.size, math.inf)
        births.append(ew[positive])
        deaths.append(h1_death[positive])
        dims.append(np.ones(int(positive.sum()), int))
    b, d, k = np.concatenate(births), np.concatenate(deaths), np.concatenate(dims)
    if not include_zero:
        keep = d > b
        b, d, k = b[keep], d[keep], k[keep]
    top = float(ew.max()) if ew.size else 0.0
    return PersistenceDiagram(b, d, k, top).sorted()


def lower_star_persistence(image, include_zero: bool = False) -> PersistenceDiagram:
    """Diagram of the sublevel-set filtration of a triangulated image."""
    return compute_persistence(build_lower_star_filtration(image), include_zero=include_zero)
