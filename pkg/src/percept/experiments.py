"""Simulation studies: scenario runs and EDD-vs-ARL curves for every detector."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .baselines import (coefficient_of_variation, fit_hotelling, mmd_from_distances, quadratic_forms,
                        wasserstein_detector)
from .binning import histogram_matrix
from .datagen import Geometry, Scenario, generate_scenario, sample_frames
from .detect import DetectorConfig, batch_statistic, edd_upper_bound, run_detector
from .embeddings import fit_pca
from .montecarlo import (as_pool, calibrate_from_maxima, calibration_length, edd_from_stats, null_maxima,
                         post_change_stats, arl_estimate)
from .pipeline import FiltrationConfig, PartitionConfig, build_partition, compute_diagrams, tilt_all
from .seeding import derive_seed
from .tda.distances import wasserstein1_distance
from .weights import estimate_distribution

METHODS = ("percept", "hotelling", "mmd", "wasserstein")


@dataclass(frozen=True)
class Regime:
    geometry: Geometry
    sigma: float
    label: str = ""


@dataclass(frozen=True)
class StudyConfig:
    """Shared settings of a simulation study.

    ``n_train`` frames per regime fit the partition (and PCA for Hotelling);
    ``n_pool`` further frames per regime are resampled in the Monte-Carlo
    runs. Baselines that need pairwise work use the first ``n_pair_pool``.
    """

    pre: Regime = Regime(Geometry.named("circle"), 0.05, "pre")
    n_points: int = 100
    filtration: FiltrationConfig = FiltrationConfig()
    partition: PartitionConfig = PartitionConfig()
    n_train: int = 100
    n_pool: int = 500
    n_pair_pool: int = 150
    pca_components: int = 15
    hotelling_window: int = 0
    mmd_windows: tuple[int, int] = (40, 40)
    m0: int = 20
    m1: int = 80
    scale: str = "interval"
    seed: int = 0


@dataclass
class RegimeData:
    frames: np.ndarray
    diagrams: list = field(repr=False)


def simulate_regime(study: StudyConfig, regime: Regime, count: int, stage: str) -> RegimeData:
    frames = sample_frames(regime.geometry, regime.sigma, count, study.n_points, study.seed,
                           f"{stage}:{regime.geometry.kind}:{regime.sigma!r}")
    return RegimeData(frames, compute_diagrams(list(frames), study.filtration))


@dataclass
class PerceptModel:
    partition: object
    config: DetectorConfig

    def histograms(self, diagrams, essential):
        return histogram_matrix(tilt_all(diagrams, essential), self.partition)


def fit_percept(study: StudyConfig, pre_train: RegimeData, post_train: RegimeData) -> PerceptModel:
    ess = study.filtration.essential
    part = build_partition(study.partition, tilt_all(pre_train.diagrams, ess), tilt_all(post_train.diagrams, ess))
    return PerceptModel(part, DetectorConfig(np.ones(part.n_bins), math.inf, study.m0, study.m1, study.scale))


# batch statistics for the Monte-Carlo engine ---------------------------------------


def hotelling_batch(model):
    def stat(X):
        Q = np.einsum("nti,ij,ntj->nt", X - model.mean, model.precision, X - model.mean) if model.window == 0 \
            else np.stack([quadratic_forms(x, model.mean, model.precision, model.window) for x in X])
        S = np.empty_like(Q)
        prev = np.zeros(Q.shape[0])
        for i in range(Q.shape[1]):
            prev = np.maximum(prev + Q[:, i] - model.drift, 0.0)
            S[:, i] = prev
        return S
    return stat


def pairwise_index_batch(D, kind, windows=(40, 40)):
    """Statistics of index sequences from a precomputed pool distance matrix."""
    if kind == "wasserstein":
        def stat(idx):
            out = np.full(idx.shape, -np.inf)
            out[:, 1:] = D[idx[:, :-1], idx[:, 1:]]
            return out
        return stat
    w_pre, w_post = windows
    span = w_pre + w_post

    def stat(idx):
        out = np.full(idx.shape, -np.inf)
        for n in range(idx.shape[0]):
            for t in range(span, idx.shape[1] + 1):
                block = idx[n, t - span:t]
                out[n, t - 1] = mmd_from_distances(D[np.ix_(block, block)], w_pre)
        return out
    return stat


# curves ---------------------------------------------------------------------------


@dataclass
class CurvePoint:
    method: str
    label: str
    target_arl: float
    threshold: float
    arl: float
    edd: float
    censored: int
    n_sequences: int
    bound: float = math.nan

    @property
    def log_arl(self) -> float:
        return math.log(self.arl) if self.arl > 0 else -math.inf


class _Method:
    """A detector reduced to pools, a batch statistic and its history need."""

    def __init__(self, stat, pre_pool, post_pools, m_pre, m_post, bound=None):
        self.stat, self.pre_pool, self.post_pools = stat, pre_pool, post_pools
        self.m_pre, self.m_post, self.bound = m_pre, m_post, bound


def _setup(method: str, study: StudyConfig, posts: list[Regime], train_post: Regime, m_post: int):
    pre_train = simulate_regime(study, study.pre, study.n_train, "train")
    pre_pool = simulate_regime(study, study.pre, study.n_pool, "pool")
    post_pools = {r.label: simulate_regime(study, r, study.n_pool, "pool") for r in posts}
    ess = study.filtration.essential
    if method == "percept":
        model = fit_percept(study, pre_train, simulate_regime(study, train_post, study.n_train, "train"))
        F_pre = model.histograms(pre_pool.diagrams, ess)
        F_post = {k: model.histograms(v.diagrams, ess) for k, v in post_pools.items()}
        p_pre = estimate_distribution(F_pre)
        w = model.config.weights

        def bound(label, b):
            return edd_upper_bound(b, p_pre, estimate_distribution(F_post[label]), w)
        return _Method(batch_statistic(model.config), F_pre, F_post, model.config.history, m_post, bound)
    if method == "hotelling":
        pca = fit_pca(pre_train.frames, study.pca_components)
        holdout = simulate_regime(study, study.pre, study.n_train, "holdout").frames
        hm = fit_hotelling(pca.project(pre_train.frames), study.hotelling_window, holdout=pca.project(holdout))
        post = {k: pca.project(v.frames) for k, v in post_pools.items()}
        return _Method(hotelling_batch(hm), pca.project(pre_pool.frames), post, 0, m_post)
    if method in ("mmd", "wasserstein"):
        P = study.n_pair_pool
        items = [pre_pool] + [post_pools[r.label] for r in posts]
        if method == "mmd":
            X = np.concatenate([r.frames[:P].reshape(P, -1) for r in items])
            D = squareform(pdist(X))
        else:
            ds = [d.finite() for r in items for d in r.diagrams[:P]]
            n = len(ds)
            D = np.zeros((n, n))
            for i in range(n):
                for j in range(i + 1, n):
                    D[i, j] = D[j, i] = wasserstein1_distance(ds[i], ds[j])
        stat = pairwise_index_batch(D, method, study.mmd_windows)
        post = {r.label: np.arange(P * (i + 1), P * (i + 2)) for i, r in enumerate(posts)}
        m_pre = sum(study.mmd_windows) if method == "mmd" else 1
        return _Method(stat, np.arange(P), post, m_pre, m_post)
    raise ValueError(f"unknown method {method!r}")


def arl_edd_curve(method: str, study: StudyConfig, posts: list[Regime], targets, n_sequences: int = 200,
                  m_post: int = 500, train_post: Regime | None = None, seed: int = 0) -> list[CurvePoint]:
    """Calibrate ``method`` to each target ARL and measure its EDD per post-change regime."""
    targets = sorted(float(a) for a in targets)
    if not targets:
        raise ValueError("threshold grid is empty: give at least one target ARL")
    if not posts:
        raise ValueError("no post-change regimes")
    train_post = train_post or posts[len(posts) // 2]
    setup = _setup(method, study, posts, train_post, m_post)
    rows = []
    stats = {r.label: post_change_stats(setup.stat, setup.pre_pool, setup.post_pools[r.label], n_sequences,
                                        setup.m_pre, m_post, derive_seed(seed, "edd", i))
             for i, r in enumerate(posts)}
    for j, A in enumerate(targets):
        m = calibration_length(A)
        maxima = null_maxima(setup.stat, setup.pre_pool, n_sequences, m, derive_seed(seed, "arl", j))
        b = calibrate_from_maxima(maxima, A, m)
        arl = arl_estimate(maxima, b, m)
        for r in posts:
            est = edd_from_stats(stats[r.label], [b])[0]
            bound = setup.bound(r.label, b) if setup.bound else math.nan
            rows.append(CurvePoint(method, r.label, A, b, arl, est.edd, est.censored, n_sequences, bound))
    return rows


# scenario runs ----------------------------------------------------------------------


@dataclass
class ScenarioOutcome:
    seed: int
    stopping_time: int | None
    false_alarm: bool
    detected: bool
    percept_cv: float
    wasserstein_cv: float
    trace: object = field(repr=False, default=None)


def scenario_study(pre: Regime, post: Regime, seeds, target_arl: float = 2000.0, window: tuple[int, int] = (200, 260),
                   study: StudyConfig | None = None, T: int = 400, t_star: int = 200, n_sequences: int = 200,
                   with_wasserstein: bool = True) -> tuple[float, list[ScenarioOutcome]]:
    """Train on independent frames, calibrate, then run one stream per seed.

    A run is detected when the first alarm falls in the half-open
    ``window`` (lo, hi]; an alarm at or before t_star is a false alarm.
    """
    study = replace(study or StudyConfig(), pre=pre)
    pre_train = simulate_regime(study, pre, study.n_train, "train")
    post_train = simulate_regime(study, post, study.n_train, "train")
    model = fit_percept(study, pre_train, post_train)
    ess = study.filtration.essential
    pool = model.histograms(simulate_regime(study, pre, study.n_pool, "pool").diagrams, ess)
    m = calibration_length(target_arl)
    maxima = null_maxima(batch_statistic(model.config), pool, n_sequences, m, derive_seed(study.seed, "calib"))
    cfg = model.config.with_threshold(calibrate_from_maxima(maxima, target_arl, m))
    kind = "noise_change" if pre.geometry == post.geometry else "shape_change"
    out = []
    for s in seeds:
        sc = Scenario(kind, pre.geometry, post.geometry, pre.sigma, post.sigma, T, t_star, study.n_points, int(s))
        diagrams = compute_diagrams(list(generate_scenario(sc)), study.filtration)
        trace = run_detector(model.histograms(diagrams, ess), cfg)
        tau = trace.stopping_time
        cv_p = coefficient_of_variation(trace.chi_max[:t_star])
        cv_w = coefficient_of_variation(wasserstein_detector(diagrams)[:t_star - 1]) if with_wasserstein else math.nan
        out.append(ScenarioOutcome(int(s), tau, tau is not None and tau <= t_star,
                                   tau is not None and window[0] < tau <= window[1], cv_p, cv_w, trace))
    return cfg.threshold, out
