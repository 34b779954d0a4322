"""Exact and Monte-Carlo tools for k independent random walks on graphs."""
from ._accel import backend_name
from .chain import (
    conductance,
    distance_profile,
    large_hit_time,
    mixing_time,
    partial_mixing_time,
    relaxation_time,
    separation_time,
    transition_matrix,
)
from .graphs import FamilySpec, WeightedGraph, build_family, read_edge_list, write_edge_list
from .harness import ExperimentConfig, run_experiment, run_sweep
from .walks import (
    AllAtVertex,
    DistributionOnSet,
    ExplicitTuple,
    StationaryProduct,
    estimate_cover_time,
    estimate_set_cover,
    estimate_set_hitting,
)

__version__ = "0.1.0"

__all__ = [
    "AllAtVertex",
    "DistributionOnSet",
    "ExperimentConfig",
    "ExplicitTuple",
    "FamilySpec",
    "StationaryProduct",
    "WeightedGraph",
    "backend_name",
    "build_family",
    "conductance",
    "distance_profile",
    "estimate_cover_time",
    "estimate_set_cover",
    "estimate_set_hitting",
    "large_hit_time",
    "mixing_time",
    "partial_mixing_time",
    "read_edge_list",
    "relaxation_time",
    "run_experiment",
    "run_sweep",
    "separation_time",
    "transition_matrix",
    "write_edge_list",
]
