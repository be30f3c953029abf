"""End-to-end composition: frames -> diagrams -> histograms -> calibrated detector."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .binning import (Partition, fit_persistence_clusters, histogram_matrix, make_equal_mass_bins,
                      make_equal_width_bins, partition_from_dict)
from .detect import DetectorConfig, StatTrace, calibrate_threshold, run_detector
from .embeddings import takens_stream
from .montecarlo import calibration_length
from .tda.diagram import PersistenceDiagram, TiltedDiagram, tilt
from .tda.persistence import lower_star_persistence, rips_persistence
from .weights import WeightProblem, estimate_distribution, optimize_weights, select_bin_count


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class FiltrationConfig:
    kind: str = "rips"
    max_dim: int = 2
    max_radius: float = 1.0
    essential: str | float = "cap"
    window: int = 0

    def __post_init__(self):
        if self.kind not in ("rips", "lower_star"):
            raise ConfigError(f"unknown filtration {self.kind!r}")
        if self.kind == "rips" and self.max_dim not in (0, 1, 2):
            raise ConfigError("max_dim must be 0, 1 or 2")
        if not (isinstance(self.essential, (int, float)) or self.essential in ("drop", "cap")):
            raise ConfigError("essential is 'drop', 'cap' or a number")
        if self.window < 0:
            raise ConfigError("window must be nonnegative")

    @property
    def homology_dims(self) -> tuple[int, ...]:
        if self.kind == "lower_star":
            return (0, 1)
        return (0,) if self.max_dim == 0 else (0, 1)


def frame_diagram(frame, fc: FiltrationConfig) -> PersistenceDiagram:
    if fc.kind == "lower_star":
        return lower_star_persistence(np.asarray(frame, dtype=float))
    return rips_persistence(np.asarray(frame, dtype=float), max_radius=fc.max_radius, max_dim=fc.max_dim)


def compute_diagrams(frames, fc: FiltrationConfig) -> list[PersistenceDiagram]:
    """One diagram per frame; a time series is first cut into Takens windows."""
    if fc.window > 0:
        frames = takens_stream(frames, fc.window)
    if len(frames) == 0:
        raise ValueError("no frames to process")
    return [frame_diagram(f, fc) for f in frames]


def tilt_all(diagrams: Sequence[PersistenceDiagram], essential="cap") -> list[TiltedDiagram]:
    return [tilt(d, essential) for d in diagrams]


@dataclass(frozen=True)
class PartitionConfig:
    kind: str = "voronoi"
    bins: int = 10
    placement: str = "equal_width"
    k_pre: int = 5
    k_post: int = 5
    dims: tuple[int, ...] = (0, 1)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("voronoi", "histogram"):
            raise ConfigError(f"unknown partition kind {self.kind!r}")
        if self.placement not in ("equal_width", "equal_mass"):
            raise ConfigError(f"unknown bin placement {self.placement!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))


def build_partition(pc: PartitionConfig, pre: Sequence[TiltedDiagram], post: Sequence[TiltedDiagram] = ()) -> Partition:
    if pc.kind == "voronoi":
        return fit_persistence_clusters(pre, post, pc.k_pre, pc.k_post, seed=pc.seed, dims=pc.dims)
    if pc.placement == "equal_mass":
        return make_equal_mass_bins(pre[0], pc.bins, pc.dims)
    return make_equal_width_bins(list(pre) + list(post), pc.bins, pc.dims)


@dataclass(frozen=True)
class WeightsConfig:
    source: str = "uniform"
    values: tuple[float, ...] = ()
    rho: float = 0.1
    mode: str = "absolute"
    candidates: tuple[int, ...] = ()

    def __post_init__(self):
        if self.source not in ("uniform", "file", "optimize"):
            raise ConfigError(f"unknown weights source {self.source!r}")


@dataclass
class Calibration:
    """Everything ``detect`` needs, serialisable to JSON."""

    partition: Partition
    detector: DetectorConfig
    essential: str | float = "cap"
    target_arl: float = math.nan
    objective: float = math.nan
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = self.detector
        return {
            "partition": self.partition.to_dict(),
            "weights": d.weights.tolist(),
            "threshold": d.threshold if math.isfinite(d.threshold) else "inf",
            "m0": d.m0,
            "m1": d.m1,
            "scale": d.scale,
            "essential": self.essential,
            "target_arl": self.target_arl,
            "objective": self.objective,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Calibration":
        try:
            part = partition_from_dict(d["partition"])
            thr = float(d["threshold"])
            det = DetectorConfig(np.asarray(d["weights"], float), thr, int(d["m0"]), int(d["m1"]), d.get("scale", "interval"))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed calibration: {exc}") from exc
        if det.n_bins != part.n_bins:
            raise ConfigError("weights length does not match the partition")
        return cls(part, det, d.get("essential", "cap"), float(d.get("target_arl", math.nan)),
                   float(d.get("objective", math.nan)), d.get("meta", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "Calibration":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def calibrate(pre: Sequence[PersistenceDiagram], post: Sequence[PersistenceDiagram], partition: PartitionConfig,
              weights: WeightsConfig, target_arl: float | None = 5000.0, m0: int = 20, m1: int = 80,
              scale: str = "interval", essential="cap", n_sequences: int = 200, m: int | None = None,
              threshold: float | None = None, seed: int = 0) -> Calibration:
    """Fit bins and weights on training diagrams, then set the threshold.

    With ``threshold`` given no Monte-Carlo run is made; otherwise the
    threshold is calibrated on the pre-change histograms to ``target_arl``.
    """
    if len(pre) == 0:
        raise ValueError("no pre-change training diagrams")
    tpre, tpost = tilt_all(pre, essential), tilt_all(post, essential)
    objective = math.nan
    if weights.source == "optimize" and partition.kind == "histogram" and weights.candidates:
        if not tpost:
            raise ConfigError("bin-count selection needs post-change training diagrams")
        L, res, part, _ = select_bin_count(weights.candidates, tpre, tpost, weights.rho, weights.mode, seed, partition.dims)
        sigma, objective = res.sigma, res.objective
    else:
        if partition.kind == "voronoi" and not tpost:
            raise ConfigError("persistence clusters need post-change training diagrams")
        part = build_partition(partition, tpre, tpost)
        if weights.source == "uniform":
            sigma = np.ones(part.n_bins)
        elif weights.source == "file":
            sigma = np.asarray(weights.values, dtype=float)
            if sigma.size != part.n_bins:
                raise ConfigError(f"weight file has {sigma.size} entries for {part.n_bins} bins")
        else:
            p_pre = estimate_distribution(histogram_matrix(tpre, part))
            p_post = estimate_distribution(histogram_matrix(tpost, part)) if tpost else None
            res = optimize_weights(WeightProblem(part.n_bins, weights.rho, weights.mode, p_pre, p_post), seed)
            sigma, objective = res.sigma, res.objective
    config = DetectorConfig(sigma, math.inf, m0, m1, scale)
    pool = histogram_matrix(tpre, part)
    meta = {"n_pre": len(pre), "n_post": len(post), "seed": seed}
    if threshold is None:
        if target_arl is None:
            raise ConfigError("either threshold or target_arl is required")
        m = calibration_length(target_arl) if m is None else m
        b = calibrate_threshold(target_arl, pool, config, n_sequences, m, seed)
        meta.update(n_sequences=n_sequences, sequence_length=m)
    else:
        b = float(threshold)
    return Calibration(part, config.with_threshold(b), essential,
                       math.nan if target_arl is None else float(target_arl), objective, meta)


def detect(diagrams: Sequence[PersistenceDiagram], calibration: Calibration) -> StatTrace:
    F = histogram_matrix(tilt_all(diagrams, calibration.essential), calibration.partition)
    return run_detector(F, calibration.detector)


def config_to_dict(obj) -> dict:
    return asdict(obj)
