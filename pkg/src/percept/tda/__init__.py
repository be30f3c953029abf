from .diagram import ESSENTIAL, PersistenceDiagram, TiltedDiagram, same_multiset, tilt
from .distances import bottleneck_distance, wasserstein1_distance
from .filtration import Filtration, build_lower_star_filtration, build_rips_filtration, pairwise_distances
from .persistence import compute_persistence, lower_star_persistence, rips_persistence

__all__ = [
    "ESSENTIAL",
    "Filtration",
    "PersistenceDiagram",
    "TiltedDiagram",
    "bottleneck_distance",
    "build_lower_star_filtration",
    "build_rips_filtration",
    "compute_persistence",
    "lower_star_persistence",
    "pairwise_distances",
    "rips_persistence",
    "same_multiset",
    "tilt",
    "wasserstein1_distance",
]
