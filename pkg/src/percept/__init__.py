"""Online change-point detection on streams of persistence diagrams."""

from .binning import HistogramBins, VoronoiPartition, bin_diagram, histogram_matrix
from .datagen import Geometry, Scenario, generate_scenario, sample_shape
from .detect import DetectorConfig, OnlineDetector, StatTrace, calibrate_threshold, estimate_edd, run_detector
from .pipeline import Calibration, calibrate, compute_diagrams, detect

__all__ = [
    "Calibration",
    "DetectorConfig",
    "Geometry",
    "HistogramBins",
    "OnlineDetector",
    "Scenario",
    "StatTrace",
    "VoronoiPartition",
    "bin_diagram",
    "calibrate",
    "calibrate_threshold",
    "compute_diagrams",
    "detect",
    "estimate_edd",
    "generate_scenario",
    "histogram_matrix",
    "run_detector",
    "sample_shape",
]
