"""Commute statistics from cell-tower traffic records.

The pipeline reconstructs each user's home and work towers from where
their phone dwells overnight and during office hours, then estimates
daily commute durations from the last record at the origin anchor and
the first at the destination anchor inside the commuting windows.
Everything downstream (distance groups, duration curves, schedule
tables, travel-budget summaries) is plain aggregation over those
per-user results.

Typical library use::

    from commutekit import PipelineParams, analyze_files

    result = analyze_files("towers.csv", ["records.csv"], PipelineParams())
    print(result.funnel, result.stats.marchetti)

The ``commutekit`` command exposes the same pipeline plus the synthetic
cohort generator used to verify it; see ``commutekit --help``.
"""

from .anchors import AnchorSet, AnchorWindows, FilterConfig
from .commute import (
    MORNING,
    NIGHT,
    CommuteObservation,
    CommuteWindows,
    UserCommuteSummary,
    morning_commute,
    night_commute,
)
from .engine import (
    FUNNEL_STAGES,
    PipelineParams,
    PipelineResult,
    analyze_files,
    analyze_table,
)
from .geo import haversine_km, isolated_towers, nearest_neighbor_stats
from .ingest import (
    CellTower,
    GeoPoint,
    RecordTable,
    RejectionReport,
    TowerSet,
    TrafficRecord,
    parse_records,
    parse_towers,
)
from .stats import CohortStats, DistanceGroup, StatsConfig, compute_cohort_stats
from .synth import CohortBundle, GroundTruth, SynthConfig, generate_cohort, true_metrics
from .trajectory import DayTrajectory, StaySegment, TimeWindow, build_day_trajectories

__version__ = "0.1.0"

__all__ = [
    "AnchorSet",
    "AnchorWindows",
    "CellTower",
    "CohortBundle",
    "CohortStats",
    "CommuteObservation",
    "CommuteWindows",
    "DayTrajectory",
    "DistanceGroup",
    "FUNNEL_STAGES",
    "FilterConfig",
    "GeoPoint",
    "GroundTruth",
    "MORNING",
    "NIGHT",
    "PipelineParams",
    "PipelineResult",
    "RecordTable",
    "RejectionReport",
    "StatsConfig",
    "StaySegment",
    "SynthConfig",
    "TimeWindow",
    "TowerSet",
    "TrafficRecord",
    "UserCommuteSummary",
    "analyze_files",
    "analyze_table",
    "build_day_trajectories",
    "compute_cohort_stats",
    "generate_cohort",
    "haversine_km",
    "isolated_towers",
    "morning_commute",
    "nearest_neighbor_stats",
    "night_commute",
    "parse_records",
    "parse_towers",
    "true_metrics",
    "__version__",
]
