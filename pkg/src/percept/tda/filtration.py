"""Simplicial filtrations (dimension <= 2) built from point clouds and images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Dense Euclidean distance matrix; shared by every Rips code path."""
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(points))


@dataclass(frozen=True)
class Filtration:
    """Simplices of dimension <= 2 in filtration order.

    ``simplices`` is an (N, 3) integer array of vertex indices padded with -1;
    ``dims`` and ``values`` are aligned with it. Rows are sorted by
    (value, dim, vertices) so that ties resolve lexicographically.
    """

    simplices: np.ndarray
    dims: np.ndarray
    values: np.ndarray
    n_vertices: int

    def __len__(self) -> int:
        return self.values.size

    @property
    def max_value(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def count(self, dim: int) -> int:
        return int(np.count_nonzero(self.dims == dim))

    def entries(self):
        """Yield ``(vertex_tuple, value)`` pairs in order."""
        for row, k, v in zip(self.simplices, self.dims, self.values):
            yield tuple(int(x) for x in row[: k + 1]), float(v)

    def validate(self) -> None:
        """Check sort order and that every face enters no later than its coface."""
        if np.any(np.diff(self.values) < 0):
            raise ValueError("filtration values are not nondecreasing")
        seen: dict[tuple, float] = {}
        for simplex, value in self.entries():
            if any(b <= a for a, b in zip(simplex, simplex[1:])):
                raise ValueError(f"simplex {simplex} is not strictly increasing")
            if len(simplex) > 1:
                for drop in range(len(simplex)):
                    face = simplex[:drop] + simplex[drop + 1:]
                    if face not in seen or seen[face] > value:
                        raise ValueError(f"face {face} of {simplex} missing or late")
            seen[simplex] = value


def _assemble(vertex_values, edges, edge_values, tris, tri_values, n_vertices) -> Filtration:
    nv = len(vertex_values)
    ne = len(edges)
    nt = len(tris)
    simplices = np.full((nv + ne + nt, 3), -1, dtype=np.int64)
    simplices[:nv, 0] = np.arange(nv)
    if ne:
        simplices[nv:nv + ne, :2] = edges
    if nt:
        simplices[nv + ne:, :] = tris
    dims = np.concatenate([np.zeros(nv, int), np.ones(ne, int), np.full(nt, 2, int)])
    values = np.concatenate([vertex_values, edge_values, tri_values]).astype(float)
    order = np.lexsort((simplices[:, 2], simplices[:, 1], simplices[:, 0], dims, values))
    return Filtration(simplices[order], dims[order], values[order], n_vertices)


def build_rips_filtration(points, max_radius: float = np.inf, max_dim: int = 2) -> Filtration:
    """Vietoris-Rips filtration truncated at ``max_radius``.

    Vertices enter at 0, an edge at its length, a triangle at its longest edge.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] == 0:
        raise ValueError("point cloud is empty")
    if not np.all(np.isfinite(points)):
        raise ValueError("point cloud has non-finite coordinates")
    if not max_radius > 0:
        raise ValueError("max_radius must be positive")
    if max_dim not in (1, 2):
        raise ValueError("max_dim must be 1 or 2")
    n = points.shape[0]
    dist = pairwise_distances(points)
    i, j = np.triu_indices(n, k=1)
    keep = dist[i, j] <= max_radius
    edges = np.column_stack([i[keep], j[keep]])
    edge_values = dist[i[keep], j[keep]]
    tris = np.zeros((0, 3), dtype=np.int64)
    tri_values = np.zeros(0)
    if max_dim == 2 and n >= 3:
        adj = dist <= max_radius
        rows = []
        for a, b in edges:
            ks = np.nonzero(adj[a, b + 1:] & adj[b, b + 1:])[0] + b + 1
            if ks.size:
                rows.append(np.column_stack([np.full(ks.size, a), np.full(ks.size, b), ks]))
        if rows:
            tris = np.concatenate(rows)
            tri_values = np.maximum.reduce(
                [dist[tris[:, 0], tris[:, 1]], dist[tris[:, 0], tris[:, 2]], dist[tris[:, 1], tris[:, 2]]]
            )
    return _assemble(np.zeros(n), edges, edge_values, tris, tri_values, n)


def grid_complex(shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Edges and triangles of the triangulated pixel grid.

    Pixel (r, c) is vertex ``r * width + c``. Every cell is split along its
    top-left to bottom-right diagonal.
    """
    h, w = shape
    idx = np.arange(h * w).reshape(h, w)
    edges = [
        np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()]),
        np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()]),
        np.column_stack([idx[:-1, :-1].ravel(), idx[1:, 1:].ravel()]),
    ]
    tl, tr = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    bl, br = idx[1:, :-1].ravel(), idx[1:, 1:].ravel()
    tris = [np.column_stack([tl, tr, br]), np.column_stack([tl, bl, br])]
    return np.concatenate(edges).astype(np.int64), np.concatenate(tris).astype(np.int64)


def build_lower_star_filtration(image) -> Filtration:
    """Lower-star (sublevel set) filtration of a 2-D intensity grid."""
    image = np.asarray(image, dtype=float)
    if image.ndim == 1:
        image = image.reshape(1, -1)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("image must be a non-empty 2-D grid")
    if not np.all(np.isfinite(image)):
        raise ValueError("image has non-finite intensities")
    f = image.ravel()
    edges, tris = grid_complex(image.shape)
    edge_values = np.maximum(f[edges[:, 0]], f[edges[:, 1]])
    tri_values = np.maximum.reduce([f[tris[:, 0]], f[tris[:, 1]], f[tris[:, 2]]]) if len(tris) else np.zeros(0)
    # vertex order within a row of `simplices` is already increasing
    return _assemble(f, edges, edge_values, tris, tri_values, f.size)
