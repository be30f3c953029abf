"""Choosing the bin weights and bin count by worst-case separation.

For weights sigma the worst-case detectable shift is

    f(sigma) = min  sum_i sigma_i (p_pre_i - p_post_i)^2
               over p_pre, p_post on the simplex with ||p_pre - p_post|| >= rho

(or the relative form with differences divided by p_post). The constraint
max_{p in simplex} sum sigma_i^2 p_i^2 <= 1 is attained at a vertex, so the
feasible set for sigma is the box [0, 1]^L. Because f is nondecreasing in
every sigma_i the box corner sigma = 1 is always a maximiser; the projected
gradient ascent below reaches it in a few steps and is kept so that other
objectives can reuse the same machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .binning import histogram_matrix, make_equal_width_bins
from .tda.diagram import TiltedDiagram

REL_FLOOR = 1e-6


@dataclass(frozen=True)
class WeightProblem:
    n_bins: int
    rho: float = 0.1
    mode: str = "absolute"
    p_pre: np.ndarray | None = None
    p_post: np.ndarray | None = None
    anchor_radius: float = 0.25

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValueError("need at least 2 bins")
        if not 0 < self.rho <= math.sqrt(2):
            raise ValueError("rho must lie in (0, sqrt 2]")
        if self.mode not in ("absolute", "relative"):
            raise ValueError("mode is 'absolute' or 'relative'")
        for name in ("p_pre", "p_post"):
            p = getattr(self, name)
            if p is None:
                continue
            p = np.asarray(p, dtype=float)
            if p.shape != (self.n_bins,) or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-8:
                raise ValueError(f"{name} must be a probability vector of length {self.n_bins}")
            object.__setattr__(self, name, p)


@dataclass(frozen=True)
class WeightResult:
    sigma: np.ndarray
    objective: float
    worst_pre: np.ndarray
    worst_post: np.ndarray


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    idx = np.arange(1, v.size + 1)
    r = idx[u - css / idx > 0][-1]
    return np.maximum(v - css[r - 1] / r, 0.0)


def _project_ball(p, center, radius):
    d = p - center
    n = np.linalg.norm(d)
    return p if n <= radius else center + d * (radius / n)


def separation(p_pre, p_post, sigma, mode="absolute") -> float:
    d = np.asarray(p_pre) - np.asarray(p_post)
    if mode == "relative":
        d = d / np.maximum(p_post, REL_FLOOR)
    return float(np.sum(sigma * d * d))


def _gradient(p, q, sigma, mode):
    d = p - q
    if mode == "absolute":
        g = 2 * sigma * d
        return g, -g
    qf = np.maximum(q, REL_FLOOR)
    gp = 2 * sigma * d / qf ** 2
    gq = -gp - np.where(q > REL_FLOOR, 2 * sigma * d * d / qf ** 3, 0.0)
    return gp, gq


def _random_sum_zero(rng, n):
    v = rng.standard_normal(n)
    return v - v.mean()


class _Feasible:
    """Alternating projections onto simplex x simplex, anchors and separation."""

    def __init__(self, problem: WeightProblem, rng):
        self.pb = problem
        self.rng = rng

    def project(self, p, q, sweeps=60):
        pb = self.pb
        for _ in range(sweeps):
            p, q = project_simplex(p), project_simplex(q)
            if pb.p_pre is not None:
                p = _project_ball(p, pb.p_pre, pb.anchor_radius)
            if pb.p_post is not None:
                q = _project_ball(q, pb.p_post, pb.anchor_radius)
            d = p - q
            n = np.linalg.norm(d)
            if n >= pb.rho and self.ok(p, q):
                return p, q
            if n < 1e-12:
                d = _random_sum_zero(self.rng, p.size)
                n = np.linalg.norm(d)
            mid = 0.5 * (p + q)
            push = d * (max(pb.rho, n) * (1 + 1e-9) / n)
            p, q = mid + push / 2, mid - push / 2
        return project_simplex(p), project_simplex(q)

    def ok(self, p, q, tol=1e-9) -> bool:
        pb = self.pb
        if p.min() < -tol or q.min() < -tol or abs(p.sum() - 1) > tol or abs(q.sum() - 1) > tol:
            return False
        if np.linalg.norm(p - q) < pb.rho - tol:
            return False
        if pb.p_pre is not None and np.linalg.norm(p - pb.p_pre) > pb.anchor_radius + tol:
            return False
        if pb.p_post is not None and np.linalg.norm(q - pb.p_post) > pb.anchor_radius + tol:
            return False
        return True

    def start(self):
        pb, L = self.pb, self.pb.n_bins
        p = pb.p_pre if pb.p_pre is not None else self.rng.dirichlet(np.ones(L))
        q = pb.p_post if pb.p_post is not None else self.rng.dirichlet(np.ones(L))
        jitter = 0.1 * pb.anchor_radius
        if pb.p_pre is not None:
            p = p + jitter * _random_sum_zero(self.rng, L)
        if pb.p_post is not None:
            q = q + jitter * _random_sum_zero(self.rng, L)
        return self.project(p, q)


def worst_case_separation(sigma, problem: WeightProblem, seed: int = 0, restarts: int = 20,
                          iters: int = 300, step: float = 0.05, patience: int = 25,
                          rel_tol: float = 1e-6):
    """Inner minimisation by projected gradient with random restarts.

    A restart ends after ``patience`` iterates without a feasible point
    improving its best value by a relative ``rel_tol``.

    Returns ``(f, p_pre, p_post)`` for the best feasible point found.
    """
    sigma = np.asarray(sigma, dtype=float)
    rng = np.random.default_rng(seed)
    feas = _Feasible(problem, rng)
    best = (math.inf, None, None)
    for _ in range(restarts):
        p, q = feas.start()
        local, stale = math.inf, 0
        for it in range(iters):
            stale += 1
            if feas.ok(p, q):
                val = separation(p, q, sigma, problem.mode)
                if val < best[0]:
                    best = (val, p.copy(), q.copy())
                if val < local * (1 - rel_tol):
                    local, stale = val, 0
            if stale >= patience:
                break
            gp, gq = _gradient(p, q, sigma, problem.mode)
            gn = math.hypot(np.linalg.norm(gp), np.linalg.norm(gq))
            if gn < 1e-14:
                break
            eta = step / (1 + it / 50)
            p_new, q_new = feas.project(p - eta * gp / gn, q - eta * gq / gn)
            moved = max(np.max(np.abs(p_new - p)), np.max(np.abs(q_new - q)))
            p, q = p_new, q_new
            if moved < 1e-10:
                break
        if feas.ok(p, q):
            val = separation(p, q, sigma, problem.mode)
            if val < best[0]:
                best = (val, p.copy(), q.copy())
    if best[1] is None:
        raise ValueError("no feasible (p_pre, p_post) pair: anchors cannot be separated by rho")
    return best


def optimize_weights(problem: WeightProblem, seed: int = 0, outer_iters: int = 20) -> WeightResult:
    """Alternate the inner worst case with a projected ascent step on sigma.

    Each ascent step is a backtracking line search along the Danskin
    gradient (the squared differences at the current worst case), starting
    from the step that takes every coordinate with positive gradient to the
    upper face of the box.
    """
    sigma = np.full(problem.n_bins, 0.5)
    f, p, q = worst_case_separation(sigma, problem, seed)
    for _ in range(outer_iters):
        d = p - q
        if problem.mode == "relative":
            d = d / np.maximum(q, REL_FLOOR)
        grad = d * d
        if grad.max() <= 0:
            break
        pos = grad > 0
        eta = float(np.max((1.0 - sigma[pos]) / grad[pos]))
        if eta <= 0:
            break
        improved = False
        for _ in range(12):
            cand = np.clip(sigma + eta * grad, 0.0, 1.0)
            fc, pc, qc = worst_case_separation(cand, problem, seed)
            if fc > f + 1e-12:
                sigma, f, p, q, improved = cand, fc, pc, qc, True
                break
            eta /= 4
        if not improved:
            break
    # the all-ones corner is feasible; keep it if the same inner solver rates it higher
    ones = np.ones(problem.n_bins)
    if not np.array_equal(sigma, ones):
        fo, po, qo = worst_case_separation(ones, problem, seed)
        if fo > f:
            sigma, f, p, q = ones, fo, po, qo
    return WeightResult(sigma, f, p, q)


def estimate_distribution(F) -> np.ndarray:
    """Pooled persistence proportions from a stack of f vectors."""
    tot = np.asarray(F, dtype=float).sum(axis=0)
    s = tot.sum()
    return np.full(tot.size, 1.0 / tot.size) if s <= 0 else tot / s


def select_bin_count(candidates: Sequence[int], pre: Sequence[TiltedDiagram], post: Sequence[TiltedDiagram],
                     rho: float = 0.1, mode: str = "absolute", seed: int = 0, dims=(0,), rel_tol: float = 1e-6):
    """Bin count with the highest optimised f; ties (within rel_tol) go to the smaller L.

    Equal-width birth bins are fit on the pooled training diagrams and the
    pooled proportions anchor the inner problem. Returns
    ``(L, WeightResult, partition, scores)`` with ``scores`` mapping L to f.
    """
    cands = sorted(set(int(c) for c in candidates))
    if not cands:
        raise ValueError("no candidate bin counts")
    if not pre or not post:
        raise ValueError("training diagrams must be nonempty")
    best = None
    scores = {}
    for L in cands:
        part = make_equal_width_bins(list(pre) + list(post), L // len(dims) if len(dims) > 1 else L, dims)
        pp = estimate_distribution(histogram_matrix(pre, part))
        pq = estimate_distribution(histogram_matrix(post, part))
        res = optimize_weights(WeightProblem(part.n_bins, rho, mode, pp, pq), seed)
        scores[L] = res.objective
        if best is None or res.objective > best[1].objective * (1 + rel_tol) + 1e-12:
            best = (L, res, part)
    return best[0], best[1], best[2], scores
