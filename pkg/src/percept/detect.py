"""Online weighted-l2 scan over persistence histograms.

At time t each candidate change point k in [t - m1, t - m0] splits the recent
past into four intervals of length delta = floor((t - k) / 2):

    (k - 2 delta, k - delta], (k - delta, k], (k, k + delta], (k + delta, t]

(the last absorbs the odd frame). Histogram mass is summed inside each
interval and normalised, and the cross statistic

    chi = (w11 - w21)^T diag(sigma) (w12 - w22)

compares the two pre-k intervals with the two post-k ones. With
``scale="interval"`` chi is multiplied by delta, which makes its null
spread roughly independent of the window length; the ARL approximation and
the detection-delay bound below are stated for this scaled form.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .montecarlo import (CalibrationError, EddEstimate, calibrate_from_maxima, edd_from_stats,
                         null_maxima, post_change_stats)


@dataclass(frozen=True)
class DetectorConfig:
    weights: np.ndarray
    threshold: float = math.inf
    m0: int = 20
    m1: int = 80
    scale: str = "interval"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size < 1 or np.any(w < 0):
            raise ValueError("weights must be a nonnegative vector")
        if self.m0 < 4:
            raise ValueError("m0 must be at least 4")
        if self.m1 <= self.m0:
            raise ValueError("m1 must exceed m0")
        if self.scale not in ("interval", "none"):
            raise ValueError("scale is 'interval' or 'none'")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n_bins: int, **kw) -> "DetectorConfig":
        return cls(np.ones(n_bins), **kw)

    @property
    def n_bins(self) -> int:
        return self.weights.size

    @property
    def history(self) -> int:
        """Frames needed for the widest window."""
        return 2 * self.m1

    def with_threshold(self, b: float) -> "DetectorConfig":
        return replace(self, threshold=float(b))


def _normalize(s):
    tot = s.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = s / tot
    return np.where(tot > 0, w, 1.0 / s.shape[-1])


def chi_statistic(w11, w12, w21, w22, weights) -> float:
    """Weighted cross inner product (w11 - w21)^T diag(weights) (w12 - w22)."""
    arrs = [np.asarray(a, dtype=float) for a in (w11, w12, w21, w22, weights)]
    if len({a.shape[-1] for a in arrs}) != 1:
        raise ValueError("all vectors must have the same length")
    w11, w12, w21, w22, sig = arrs
    return np.sum(sig * (w11 - w21) * (w12 - w22), axis=-1)


def interval_bounds(t: int, k: int) -> tuple[int, list[tuple[int, int]]]:
    """delta and the four half-open (a, b] frame intervals for (t, k)."""
    delta = (t - k) // 2
    return delta, [(k - 2 * delta, k - delta), (k - delta, k), (k, k + delta), (k + delta, t)]


class StreamBuffer:
    """Ring buffer of the most recent per-frame histogram vectors.

    Frames are numbered from 1; ``t`` is the number pushed so far.
    """

    def __init__(self, n_bins: int, capacity: int):
        self.data = np.zeros((capacity, n_bins))
        self.capacity = capacity
        self.t = 0

    def push(self, f) -> None:
        self.data[self.t % self.capacity] = f
        self.t += 1

    @property
    def oldest(self) -> int:
        return max(1, self.t - self.capacity + 1)

    def window(self, a: int, b: int) -> np.ndarray:
        """Frames a+1..b as rows."""
        if a + 1 < self.oldest or b > self.t:
            raise IndexError(f"frames ({a}, {b}] not held (have {self.oldest}..{self.t})")
        idx = np.arange(a, b) % self.capacity
        return self.data[idx]

    def interval_sum(self, a: int, b: int) -> np.ndarray:
        return self.window(a, b).sum(axis=0)


def interval_proportions(buffer: StreamBuffer, t: int, k: int):
    """The four normalised interval histograms (w11, w12, w21, w22)."""
    delta, ivs = interval_bounds(t, k)
    if delta < 1 or k - 2 * delta < 0:
        raise ValueError(f"k={k} has no valid intervals at t={t}")
    sums = np.array([buffer.interval_sum(a, b) for a, b in ivs])
    return tuple(_normalize(sums))


def _valid_k(t: int, k: int, oldest: int) -> bool:
    delta = (t - k) // 2
    return delta >= 1 and k - 2 * delta >= oldest - 1


def scan_statistic(buffer: StreamBuffer, t: int, config: DetectorConfig) -> tuple[float, int]:
    """Max of chi over the window-limited candidates and its argmax.

    Returns ``(-inf, -1)`` while no candidate has enough history. Ties go
    to the smallest k.
    """
    best, arg = -math.inf, -1
    lo = max(0, t - config.m1)
    for k in range(lo, t - config.m0 + 1):
        if not _valid_k(t, k, buffer.oldest):
            continue
        w = interval_proportions(buffer, t, k)
        chi = float(chi_statistic(*w, config.weights))
        if config.scale == "interval":
            chi *= (t - k) // 2
        if chi > best:
            best, arg = chi, k
    return best, arg


@dataclass
class StatTrace:
    """Per-time detector output; arrays are aligned with ``t``."""

    t: np.ndarray
    chi_max: np.ndarray
    k_star: np.ndarray
    alarm: np.ndarray
    threshold: float = math.inf

    @property
    def stopping_time(self) -> int | None:
        hits = np.nonzero(self.alarm)[0]
        return int(self.t[hits[0]]) if hits.size else None

    def to_csv(self, path) -> None:
        write_trace_csv(path, self.t, self.chi_max, self.alarm, self.k_star)


def write_trace_csv(path, t, stat, alarm, k_star=None) -> None:
    """Shared trace schema: t, chi_max, k_star, alarm (k_star blank if unused)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "chi_max", "k_star", "alarm"])
        for i in range(len(t)):
            s = stat[i]
            ks = "" if k_star is None or k_star[i] < 0 else int(k_star[i])
            w.writerow([int(t[i]), "" if not np.isfinite(s) else repr(float(s)), ks, int(bool(alarm[i]))])


def read_trace_csv(path) -> dict:
    t, stat, ks, alarm = [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            t.append(int(row["t"]))
            stat.append(float(row["chi_max"]) if row["chi_max"] else -math.inf)
            ks.append(int(row["k_star"]) if row["k_star"] else -1)
            alarm.append(row["alarm"] == "1")
    return {"t": np.array(t), "chi_max": np.array(stat), "k_star": np.array(ks), "alarm": np.array(alarm)}


def scan_batch(F, config: DetectorConfig) -> tuple[np.ndarray, np.ndarray]:
    """chi_max and k* for every t of one or many sequences.

    ``F`` has shape (..., T, L). Returns arrays of shape (..., T) indexed by
    t - 1; entries without a valid candidate are -inf / -1.
    """
    F = np.asarray(F, dtype=float)
    T = F.shape[-2]
    P = np.concatenate([np.zeros(F.shape[:-2] + (1, F.shape[-1])), np.cumsum(F, axis=-2)], axis=-2)
    best = np.full(F.shape[:-1], -np.inf)
    arg = np.full(F.shape[:-1], -1, dtype=np.int64)
    t = np.arange(1, T + 1)
    # largest lag first so ties keep the smallest k
    for lag in range(config.m1, config.m0 - 1, -1):
        delta = lag // 2
        ok = t - lag - 2 * delta >= 0
        if not ok.any():
            continue
        tt = t[ok]
        k = tt - lag
        bounds = [k - 2 * delta, k - delta, k, k + delta, tt]
        sums = [P[..., bounds[i + 1], :] - P[..., bounds[i], :] for i in range(4)]
        w11, w12, w21, w22 = (_normalize(s) for s in sums)
        chi = chi_statistic(w11, w12, w21, w22, config.weights)
        if config.scale == "interval":
            chi = chi * delta
        cur = best[..., ok]
        better = chi > cur
        best[..., ok] = np.where(better, chi, cur)
        arg[..., ok] = np.where(better, k, arg[..., ok])
    return best, arg


def run_detector(F, config: DetectorConfig) -> StatTrace:
    """Evaluate the scan at every frame; the trace continues past the alarm."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[1] != config.n_bins:
        raise ValueError(f"expected (T, {config.n_bins}) histogram stream, got {F.shape}")
    best, arg = scan_batch(F, config)
    t = np.arange(1, F.shape[0] + 1)
    return StatTrace(t, best, arg, best >= config.threshold, config.threshold)


class OnlineDetector:
    """Frame-at-a-time detector backed by a :class:`StreamBuffer`."""

    def __init__(self, config: DetectorConfig):
        self.config = config
        self.buffer = StreamBuffer(config.n_bins, config.history)
        self.records: list[tuple[int, float, int, bool]] = []
        self.stopping_time: int | None = None

    def update(self, f) -> tuple[float, int, bool]:
        self.buffer.push(np.asarray(f, dtype=float))
        t = self.buffer.t
        chi, k = scan_statistic(self.buffer, t, self.config)
        alarm = chi >= self.config.threshold
        if alarm and self.stopping_time is None:
            self.stopping_time = t
        self.records.append((t, chi, k, alarm))
        return chi, k, alarm

    def trace(self) -> StatTrace:
        t, chi, k, a = (np.array(x) for x in zip(*self.records)) if self.records else ([],) * 4
        return StatTrace(np.asarray(t), np.asarray(chi, float), np.asarray(k), np.asarray(a, bool), self.config.threshold)


def sigma_p_squared(p_pre, weights) -> float:
    """Null variance term 4[sum s_i^2 p_i^2 (1-p_i)^2 + sum_{i!=j} s_i s_j p_i^2 p_j^2]."""
    p = np.asarray(p_pre, dtype=float)
    s = np.asarray(weights, dtype=float)
    a = s * p ** 2
    diag = np.sum(s ** 2 * p ** 2 * (1 - p) ** 2)
    off = a.sum() ** 2 - np.sum(a ** 2)
    return float(4 * (diag + off))


def nu(y):
    """Siegmund's overshoot correction, nu(y) ~ exp(-0.583 y) for small y."""
    y = np.asarray(y, dtype=float)
    h = y / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (2 / y) * (norm.cdf(h) - 0.5) / (h * norm.cdf(h) + norm.pdf(h))
    return np.where(y == 0, 1.0, out)


def arl_approximation(b: float, p_pre, weights, m0: int = 20, m1: int = 80) -> float:
    """Analytic average run length of the scaled scan at threshold ``b``."""
    p = np.asarray(p_pre, dtype=float)
    if not b > 0:
        raise ValueError("threshold must be positive")
    if p.sum() <= 0:
        raise ValueError("p_pre must be a probability vector")
    p = p / p.sum()
    s2 = sigma_p_squared(p, weights)
    if s2 <= 0:
        raise ValueError("degenerate p_pre: zero null variance")
    lo = math.sqrt(4 * b * b / (m1 * s2))
    hi = math.sqrt(4 * b * b / (m0 * s2))
    integral, _ = integrate.quad(lambda y: y * float(nu(y)) ** 2, lo, hi, limit=200)
    log_arl = -math.log(2 * b) + b * b / (2 * s2) + 0.5 * math.log(2 * math.pi * s2) - math.log(integral)
    return math.exp(log_arl) if log_arl < 700 else math.inf


# Monte-Carlo calibration ------------------------------------------------------


def batch_statistic(config: DetectorConfig):
    """chi_max over sampled histogram sequences, for the Monte-Carlo engine."""
    return lambda F: scan_batch(F, config)[0]


def calibrate_threshold(target_arl: float, pre_pool, config: DetectorConfig, n_sequences: int = 200,
                        m: int = 500, seed: int = 0) -> float:
    """Smallest grid threshold whose Monte-Carlo ARL reaches ``target_arl``."""
    if m <= config.m0:
        raise ValueError("sequence length must exceed m0")
    maxima = null_maxima(batch_statistic(config), np.asarray(pre_pool, float), n_sequences, m, seed)
    return calibrate_from_maxima(maxima, target_arl, m)


def estimate_edd(pre_pool, post_pool, b: float, config: DetectorConfig, n_sequences: int = 200,
                 m_pre: int | None = None, m_post: int = 200, seed: int = 0) -> EddEstimate:
    """Mean delay to alarm after a change at the end of ``m_pre`` history frames.

    The scan is only consulted from the first post-change frame on; runs
    without an alarm count as ``m_post`` and are reported in ``censored``.
    """
    m_pre = config.history if m_pre is None else m_pre
    if m_pre < 2 * (config.m0 // 2):
        raise ValueError("m_pre too short for the smallest window")
    stats = post_change_stats(batch_statistic(config), np.asarray(pre_pool, float),
                              np.asarray(post_pool, float), n_sequences, m_pre, m_post, seed)
    return edd_from_stats(stats, [b])[0]


def edd_upper_bound(b: float, p_pre, p_post, weights) -> float:
    """2b / (min_i sigma_i * ||p_pre - p_post||^2)."""
    d = np.asarray(p_pre, float) - np.asarray(p_post, float)
    denom = float(np.min(weights)) * float(d @ d)
    return math.inf if denom <= 0 else 2 * b / denom
