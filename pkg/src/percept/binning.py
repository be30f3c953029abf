"""Fixed-length persistence histograms from tilted diagrams.

Two kinds of partition are supported: birth-axis histogram bins and Voronoi
cells around k-means centres in the (birth, persistence) plane. Either is
built per homology dimension and the per-dimension vectors are concatenated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .tda.diagram import TiltedDiagram

BIRTH_MARGIN = 1e-9


@dataclass(frozen=True)
class PersistenceHistogram:
    f: np.ndarray
    omega: np.ndarray
    empty: bool = False


class Partition:
    """Shared behaviour of the two partition kinds."""

    dims: tuple[int, ...]

    def sizes(self) -> list[int]:
        raise NotImplementedError

    def assign(self, dim: int, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def n_bins(self) -> int:
        return int(sum(self.sizes()))

    def offsets(self) -> dict[int, int]:
        out, acc = {}, 0
        for d, s in zip(self.dims, self.sizes()):
            out[d] = acc
            acc += s
        return out


@dataclass(frozen=True)
class HistogramBins(Partition):
    """Right breakpoints b_1 < ... < b_L per homology dimension.

    Bin l is [b_{l-1}, b_l) with b_0 = 0; births below 0 fall in the first
    bin and births at or past b_L in the last.
    """

    breakpoints: dict

    def __post_init__(self):
        bp = {int(k): np.asarray(v, dtype=float) for k, v in self.breakpoints.items()}
        for d, b in bp.items():
            if b.size < 2:
                raise ValueError("need at least 2 bins")
            if np.any(np.diff(b) <= 0):
                raise ValueError(f"breakpoints for H{d} are not strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "dims", tuple(sorted(bp)))

    def sizes(self):
        return [self.breakpoints[d].size for d in self.dims]

    def assign(self, dim, points):
        b = self.breakpoints[dim]
        idx = np.searchsorted(b, points[:, 0], side="right")
        return np.minimum(idx, b.size - 1)

    def to_dict(self) -> dict:
        return {"kind": "histogram", "breakpoints": {str(d): self.breakpoints[d].tolist() for d in self.dims}}


@dataclass(frozen=True)
class VoronoiPartition(Partition):
    """Nearest-centre cells in the tilted plane, per homology dimension."""

    centers: dict

    def __post_init__(self):
        cs = {int(k): np.asarray(v, dtype=float).reshape(-1, 2) for k, v in self.centers.items()}
        for d, c in cs.items():
            if c.shape[0] < 2:
                raise ValueError(f"H{d} partition needs at least 2 distinct centres")
        object.__setattr__(self, "centers", cs)
        object.__setattr__(self, "dims", tuple(sorted(cs)))

    def sizes(self):
        return [self.centers[d].shape[0] for d in self.dims]

    def assign(self, dim, points):
        c = self.centers[dim]
        d2 = ((points[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)  # first minimum, i.e. lowest index on ties

    def to_dict(self) -> dict:
        return {"kind": "voronoi", "centers": {str(d): self.centers[d].tolist() for d in self.dims}}


def partition_from_dict(d: dict) -> Partition:
    if d["kind"] == "histogram":
        return HistogramBins(d["breakpoints"])
    if d["kind"] == "voronoi":
        return VoronoiPartition(d["centers"])
    raise ValueError(f"unknown partition kind {d['kind']!r}")


def save_partition(partition: Partition, path) -> None:
    with open(path, "w") as fh:
        json.dump(partition.to_dict(), fh, indent=2)


def load_partition(path) -> Partition:
    with open(path) as fh:
        return partition_from_dict(json.load(fh))


def _pooled_births(diagrams: Iterable[TiltedDiagram], dim: int) -> np.ndarray:
    parts = [d.births[d.dims == dim] for d in diagrams]
    return np.concatenate(parts) if parts else np.zeros(0)


def make_equal_width_bins(reference: Sequence[TiltedDiagram], n_bins: int, dims: Sequence[int] = (0,)) -> HistogramBins:
    """Equal-width birth bins on [0, max reference birth]."""
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    reference = list(reference)
    if not reference or all(len(d) == 0 for d in reference):
        raise ValueError("reference diagrams are all empty")
    bps = {}
    for dim in dims:
        births = _pooled_births(reference, dim)
        top = (births.max() if births.size else 0.0) + BIRTH_MARGIN
        bps[dim] = top * np.arange(1, n_bins + 1) / n_bins
    return HistogramBins(bps)


def make_equal_mass_bins(reference: TiltedDiagram, n_bins: int, dims: Sequence[int] = (0,)) -> HistogramBins:
    """Birth bins holding roughly equal total persistence in one reference diagram.

    Features are swept in order of birth; a bin is closed as soon as the
    running persistence sum reaches the next multiple of total / n_bins, so
    every bin's mass is within one feature of the target. A feature heavier
    than several targets is followed by single-feature bins until the sweep
    catches up, and cuts are forced once the remaining distinct births are
    just enough to fill the remaining bins.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    if len(reference) == 0:
        raise ValueError("reference diagram is empty")
    bps = {}
    for dim in dims:
        sub = reference.in_dim(dim)
        order = np.argsort(sub.births, kind="stable")
        births, pers = sub.births[order], sub.persistence[order]
        total = pers.sum()
        if total <= 0:
            raise ValueError(f"H{dim} reference diagram has no persistence")
        cum = np.cumsum(pers)
        gaps = births[1:] > births[:-1]
        # gaps still available after position i, used to force late cuts
        gaps_left = np.cumsum(gaps[::-1])[::-1]
        cuts = []
        level = 1
        for i in range(births.size - 1):
            if level >= n_bins:
                break
            if not gaps[i]:
                continue
            if cum[i] >= level * total / n_bins - 1e-12 or gaps_left[i] <= n_bins - level:
                cuts.append(0.5 * (births[i] + births[i + 1]))
                level += 1
        top = births[-1] + BIRTH_MARGIN
        if len(cuts) < n_bins - 1:
            raise ValueError(f"H{dim} reference has too few distinct births for {n_bins} bins")
        bps[dim] = np.array(cuts + [top])
    return HistogramBins(bps)


def bin_diagram(diagram: TiltedDiagram, partition: Partition) -> PersistenceHistogram:
    """Persistence mass per bin, f, and its proportions, omega.

    A diagram with no mass maps to f = 0 and uniform omega, flagged empty.
    """
    f = np.zeros(partition.n_bins)
    offsets = partition.offsets()
    for dim in partition.dims:
        pts = diagram.points(dim)
        if pts.shape[0] == 0:
            continue
        idx = partition.assign(dim, pts) + offsets[dim]
        np.add.at(f, idx, pts[:, 1])
    total = f.sum()
    if total <= 0:
        return PersistenceHistogram(f, np.full(f.size, 1.0 / f.size), True)
    return PersistenceHistogram(f, f / total, False)


def histogram_matrix(diagrams: Iterable[TiltedDiagram], partition: Partition) -> np.ndarray:
    """Stack of f vectors, one row per frame."""
    return np.array([bin_diagram(d, partition).f for d in diagrams]).reshape(-1, partition.n_bins)


def _kmeans_pp(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        j = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers[i] = points[j]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def kmeans(points, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 100, tol: float = 1e-8):
    """Lloyd's algorithm with k-means++ seeding; best inertia over restarts.

    Iteration stops when inertia improves by less than ``tol`` relative.
    Returns ``(centers, labels, inertia)``.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if not 1 <= k <= points.shape[0]:
        raise ValueError(f"k={k} needs at least k points, got {points.shape[0]}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        centers = _kmeans_pp(points, k, rng)
        prev = np.inf
        for _ in range(max_iter):
            d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            labels = np.argmin(d2, axis=1)
            inertia = d2[np.arange(points.shape[0]), labels].sum()
            for c in range(k):
                members = points[labels == c]
                if members.size:
                    centers[c] = members.mean(axis=0)
            if np.isfinite(prev) and prev - inertia <= tol * prev:
                break
            prev = inertia
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(points.shape[0]), labels].sum())
        if best is None or inertia < best[2]:
            best = (centers.copy(), labels, inertia)
    return best


def _dedupe(centers, tol=1e-9):
    kept = []
    for c in centers:
        if all(np.max(np.abs(c - k)) > tol for k in kept):
            kept.append(c)
    return np.array(kept)


def _pooled_points(diagrams, dim):
    parts = [d.points(dim) for d in diagrams]
    return np.concatenate(parts) if parts else np.zeros((0, 2))


def fit_persistence_clusters(pre: Sequence[TiltedDiagram], post: Sequence[TiltedDiagram],
                             k_pre, k_post, seed: int = 0, dims: Sequence[int] = (0,)) -> VoronoiPartition:
    """Voronoi partition from k-means centres of pooled pre- and post-change points.

    ``k_pre``/``k_post`` are ints or per-dimension dicts. Coincident centres
    are merged, so the partition can have fewer than k_pre + k_post cells.
    """
    if not len(post):
        raise ValueError("persistence clusters need post-change training diagrams")
    centers = {}
    for dim in dims:
        kp = k_pre[dim] if isinstance(k_pre, dict) else k_pre
        kq = k_post[dim] if isinstance(k_post, dict) else k_post
        a, b = _pooled_points(pre, dim), _pooled_points(post, dim)
        if a.shape[0] < kp or b.shape[0] < kq:
            raise ValueError(f"H{dim}: not enough training points for k_pre={kp}, k_post={kq}")
        ca = kmeans(a, kp, seed=seed)[0]
        cb = kmeans(b, kq, seed=seed + 1)[0]
        centers[dim] = _dedupe(np.concatenate([ca, cb]))
    return VoronoiPartition(centers)


def elbow_select_k(points, k_range: Iterable[int], seed: int = 0) -> int:
    """k with the largest second difference of the inertia curve.

    Only interior members of ``k_range`` have a second difference; ranges
    with fewer than three values return their smallest k. Ties go to the
    smaller k.
    """
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValueError("k_range is empty")
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], TiltedDiagram):
        points = np.concatenate([d.points() for d in points])
    if len(ks) < 3:
        return ks[0]
    inertia = np.array([kmeans(points, k, seed=seed)[2] for k in ks])
    curvature = inertia[:-2] - 2 * inertia[1:-1] + inertia[2:]
    return ks[1 + int(np.argmax(curvature))]
