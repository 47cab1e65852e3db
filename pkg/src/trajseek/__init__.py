"""In-memory spatiotemporal trajectory search.

Answers distance-threshold queries over 4-D polyline trajectories: for
every query segment, which stored entry segments come within distance d
of it, and over which time interval.  Built from a temporal-bin index,
a data-parallel batch kernel, a family of query-batch planners, and a
calibrated response-time model that recommends batch sizes.
"""

from .core import (
    DomainError,
    FormatError,
    ResultItem,
    ResultSet,
    SegmentStore,
    SpacetimePoint,
    TimeInterval,
    TrajectorySegment,
    pair_intervals,
    position_at,
    temporal_intersection,
    threshold_interval,
)
from .datagen import GenProfile, generate, load, make_profile, sample_queries, save
from .engine import SearchStats, execute_batch, run_search
from .index import TemporalBin, TemporalIndex, build_index, candidate_range, interaction_count
from .oracle import brute_force_search, count_interactions_naive
from .perfmodel import (
    BenchSurfaces,
    HitRateProfile,
    HostOverheadModel,
    InteractionMix,
    PerfModel,
    PowerLawFit,
    Prediction,
    calibrate_host,
    calibrate_surfaces,
    estimate_hit_rates,
    fit_power_law,
    interaction_mix,
    load_model,
    predict,
    recommend_batch_size,
    save_model,
)
from .planner import (
    BatchPlan,
    QueryBatch,
    greedy_max,
    greedy_min,
    num_interactions,
    periodic,
    setsplit_fixed,
    setsplit_max,
    setsplit_minmax,
)

__version__ = "0.1.0"

__all__ = [
    "BatchPlan",
    "BenchSurfaces",
    "DomainError",
    "FormatError",
    "GenProfile",
    "HitRateProfile",
    "HostOverheadModel",
    "InteractionMix",
    "PerfModel",
    "PowerLawFit",
    "Prediction",
    "QueryBatch",
    "ResultItem",
    "ResultSet",
    "SearchStats",
    "SegmentStore",
    "SpacetimePoint",
    "TemporalBin",
    "TemporalIndex",
    "TimeInterval",
    "TrajectorySegment",
    "brute_force_search",
    "build_index",
    "calibrate_host",
    "calibrate_surfaces",
    "candidate_range",
    "count_interactions_naive",
    "estimate_hit_rates",
    "execute_batch",
    "fit_power_law",
    "generate",
    "greedy_max",
    "greedy_min",
    "interaction_count",
    "interaction_mix",
    "load",
    "load_model",
    "make_profile",
    "num_interactions",
    "pair_intervals",
    "periodic",
    "position_at",
    "predict",
    "recommend_batch_size",
    "run_search",
    "sample_queries",
    "save",
    "save_model",
    "setsplit_fixed",
    "setsplit_max",
    "setsplit_minmax",
    "temporal_intersection",
    "threshold_interval",
]
