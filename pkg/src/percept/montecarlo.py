"""Monte-Carlo run-length machinery shared by every detector.

A detector is represented by a batch statistic: a function mapping sampled
sequences of shape (n, m, ...) to per-time statistics of shape (n, m),
with -inf or NaN where the statistic is undefined. Pools are arrays (or
object arrays of diagrams) sampled with replacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .seeding import frame_rng

BatchStatistic = Callable[[np.ndarray], np.ndarray]

CHUNK = 50


class CalibrationError(RuntimeError):
    def __init__(self, message, attained=None):
        super().__init__(message)
        self.attained = attained


def as_pool(items) -> np.ndarray:
    if isinstance(items, np.ndarray):
        return items
    out = np.empty(len(items), dtype=object)
    out[:] = list(items)
    return out


def _chunks(n, size=CHUNK):
    for start in range(0, n, size):
        yield start, min(n, start + size)


def _sample(pool, n, length, rng):
    return pool[rng.integers(len(pool), size=(n, length))]


def _clean(stats):
    s = np.asarray(stats, dtype=float)
    return np.where(np.isnan(s), -np.inf, s)


def null_maxima(stat: BatchStatistic, pool, n_sequences: int, m: int, seed: int) -> np.ndarray:
    """Largest statistic of each of ``n_sequences`` null sequences of length m."""
    pool = as_pool(pool)
    if len(pool) < 1:
        raise ValueError("pool is empty")
    rng = frame_rng(seed, "null-sequences")
    out = np.empty(n_sequences)
    for a, b in _chunks(n_sequences):
        out[a:b] = _clean(stat(_sample(pool, b - a, m, rng))).max(axis=1)
    return out


def post_change_stats(stat: BatchStatistic, pre_pool, post_pool, n_sequences: int, m_pre: int,
                      m_post: int, seed: int) -> np.ndarray:
    """Statistics at the m_post frames following m_pre pre-change frames."""
    pre_pool, post_pool = as_pool(pre_pool), as_pool(post_pool)
    if len(post_pool) < 1 or (m_pre > 0 and len(pre_pool) < 1):
        raise ValueError("pools must be nonempty")
    rng = frame_rng(seed, "change-sequences")
    out = np.empty((n_sequences, m_post))
    for a, b in _chunks(n_sequences):
        parts = [_sample(post_pool, b - a, m_post, rng)]
        if m_pre > 0:
            parts.insert(0, _sample(pre_pool, b - a, m_pre, rng))
        seq = np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0]
        out[a:b] = _clean(stat(seq))[:, m_pre:]
    return out


def arl_estimate(maxima, b: float, m: int) -> float:
    """m / -ln(p_hat) with p_hat the fraction of sequence maxima below b."""
    p_hat = float(np.mean(np.asarray(maxima) < b))
    if p_hat >= 1.0:
        return math.inf
    if p_hat <= 0.0:
        return 0.0
    return m / -math.log(p_hat)


def threshold_grid(maxima, n: int = 60) -> np.ndarray:
    """Candidate thresholds between the 50th and 99.9th percentile of maxima.

    Log-spaced when the range is positive, linear otherwise.
    """
    finite = np.asarray(maxima, dtype=float)
    finite = finite[np.isfinite(finite)]
    if finite.size == 0:
        raise CalibrationError("no finite sequence maxima; sequences too short for the statistic")
    lo, hi = np.percentile(finite, [50, 99.9])
    if lo > 0 and hi > lo:
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi if hi > lo else lo + 1.0, n)


def calibrate_from_maxima(maxima, target_arl: float, m: int, grid=None) -> float:
    """Smallest grid threshold whose estimated ARL reaches the target.

    The lowest grid point already has an estimate of about m / ln 2, so
    ``m`` should stay below target / 1.44 for the search to be informative.
    """
    grid = threshold_grid(maxima) if grid is None else np.sort(np.asarray(grid, float))
    if grid.size == 0:
        raise ValueError("threshold grid is empty")
    ests = [arl_estimate(maxima, b, m) for b in grid]
    for b, est in zip(grid, ests):
        if est >= target_arl:
            return float(b)
    raise CalibrationError(f"target ARL {target_arl} unreachable; best estimate {max(ests):.1f}", max(ests))


def calibration_length(target_arl: float, cap: int = 500, floor: int = 100) -> int:
    """Sequence length that keeps the target inside the threshold grid's range."""
    return int(max(floor, min(cap, math.ceil(target_arl / 2))))


def first_crossing(stats, b: float):
    """1-based index of the first stat >= b per row, censored at the row length."""
    hits = np.asarray(stats) >= b
    any_hit = hits.any(axis=-1)
    first = np.argmax(hits, axis=-1) + 1
    return np.where(any_hit, first, hits.shape[-1]), ~any_hit


@dataclass
class EddEstimate:
    threshold: float
    edd: float
    delays: np.ndarray = field(repr=False)
    censored: int = 0


def edd_from_stats(stats, thresholds: Sequence[float]) -> list[EddEstimate]:
    out = []
    for b in np.atleast_1d(np.asarray(thresholds, dtype=float)):
        delays, cens = first_crossing(stats, b)
        out.append(EddEstimate(float(b), float(delays.mean()), delays, int(cens.sum())))
    return out


def run_lengths(stat: BatchStatistic, pool, b: float, n_sequences: int, m: int, seed: int):
    """First alarm times on fresh null sequences, censored at m."""
    pool = as_pool(pool)
    rng = frame_rng(seed, "run-lengths")
    lengths = np.empty(n_sequences, dtype=np.int64)
    censored = np.empty(n_sequences, dtype=bool)
    for a, c in _chunks(n_sequences):
        lengths[a:c], censored[a:c] = first_crossing(_clean(stat(_sample(pool, c - a, m, rng))), b)
    return lengths, censored


def censored_exponential_arl(lengths, censored) -> float:
    """Maximum-likelihood mean of exponential run lengths under right censoring."""
    alarms = int((~np.asarray(censored)).sum())
    exposure = float(np.sum(lengths))
    return math.inf if alarms == 0 else exposure / alarms
