"""Cohort-level commute statistics.

Every aggregate is a deterministic function of per-user summaries (means,
distances) or raw observations (clock schedules).  Counting uses exact
rationals and averaging uses compensated summation, so results do not depend
on user ordering or on how a cohort was sharded during computation.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import clock
from .commute import MORNING, NIGHT, CommuteObservation, UserCommuteSummary

DIRECTIONS = (MORNING, NIGHT)


class DistanceGroup(enum.Enum):
    """The five commute-distance strata, half-open [lo, hi) in km."""

    G0_2 = ("0-2km", 0.0, 2.0)
    G2_6 = ("2-6km", 2.0, 6.0)
    G6_15 = ("6-15km", 6.0, 15.0)
    G15_25 = ("15-25km", 15.0, 25.0)
    G25_PLUS = (">=25km", 25.0, math.inf)

    def __init__(self, label: str, lo: float, hi: float):
        self.label = label
        self.lo = lo
        self.hi = hi


def classify_distance_group(distance_km: float) -> DistanceGroup:
    """Map a distance to its group; left-closed, so 2.0 km is already 2-6km."""
    if not distance_km >= 0 or math.isnan(distance_km):
        raise ValueError(f"distance must be non-negative, got {distance_km}")
    for group in DistanceGroup:
        if group.lo <= distance_km < group.hi:
            return group
    return DistanceGroup.G25_PLUS  # distance_km == inf


def group_proportions(
    summaries: Sequence[UserCommuteSummary],
) -> dict[DistanceGroup, Fraction]:
    """Exact share of users per distance group; shares sum to exactly 1."""
    if not summaries:
        raise ValueError("no users to classify")
    counts: dict[DistanceGroup, int] = {g: 0 for g in DistanceGroup}
    for s in summaries:
        counts[classify_distance_group(s.distance_km)] += 1
    total = len(summaries)
    return {g: Fraction(n, total) for g, n in counts.items()}


def _direction_mean(summary: UserCommuteSummary, direction: str) -> float | None:
    return summary.mean_morning_h if direction == MORNING else summary.mean_night_h


def mean_time_by_bin(
    summaries: Sequence[UserCommuteSummary],
    direction: str,
    bin_km: float = 3.0,
) -> list[tuple[float, float, int]]:
    """(bin center km, mean hours, user count) per distance bin.

    Bins are [k*bin_km, (k+1)*bin_km); empty bins are omitted.  An infinite
    bin width collapses everything into one bin, which then reports the
    global mean.
    """
    if not bin_km > 0:
        raise ValueError("bin_km must be positive")
    buckets: dict[int, list[float]] = defaultdict(list)
    for s in summaries:
        mean = _direction_mean(s, direction)
        if mean is None:
            continue
        k = 0 if math.isinf(bin_km) else int(s.distance_km // bin_km)
        buckets[k].append(mean)
    out = []
    for k in sorted(buckets):
        values = buckets[k]
        center = math.inf if math.isinf(bin_km) else (k + 0.5) * bin_km
        out.append((center, math.fsum(values) / len(values), len(values)))
    return out


def time_cdf(
    summaries: Sequence[UserCommuteSummary],
    direction: str,
    grid_h: Sequence[float],
) -> list[tuple[float, float]]:
    """Fraction of users whose per-user mean duration is <= each grid point.

    The denominator is the users that have observations in this direction.
    """
    grid = [float(g) for g in grid_h]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    means = sorted(
        m for s in summaries if (m := _direction_mean(s, direction)) is not None
    )
    if not means:
        raise ValueError(f"no users with {direction} observations")
    out = []
    i = 0
    for g in grid:
        while i < len(means) and means[i] <= g:
            i += 1
        out.append((g, i / len(means)))
    return out


def group_histograms(
    summaries: Sequence[UserCommuteSummary],
    direction: str,
    edges_h: Sequence[float] = (0.25, 0.5, 1.0),
) -> dict[DistanceGroup, list[tuple[str, Fraction]]]:
    """Within each distance group, the share of users per duration band.

    ``edges_h`` are inner band edges; bands are [0, e1), [e1, e2), ...,
    [e_last, inf).  Groups with no users in this direction are omitted;
    shares within a group sum to exactly 1.
    """
    edges = [float(e) for e in edges_h]
    if any(b <= a for a, b in zip(edges, edges[1:])) or (edges and edges[0] <= 0):
        raise ValueError("band edges must be positive and strictly increasing")
    bounds = [0.0] + edges + [math.inf]
    labels = [_band_label(lo, hi) for lo, hi in zip(bounds, bounds[1:])]

    counts: dict[DistanceGroup, list[int]] = defaultdict(lambda: [0] * len(labels))
    for s in summaries:
        mean = _direction_mean(s, direction)
        if mean is None:
            continue
        band = sum(1 for e in edges if mean >= e)
        counts[classify_distance_group(s.distance_km)][band] += 1
    return {
        group: [
            (label, Fraction(n, sum(per_band)))
            for label, n in zip(labels, per_band)
        ]
        for group, per_band in sorted(counts.items(), key=lambda kv: kv[0].lo)
    }


def _band_label(lo: float, hi: float) -> str:
    def fmt(x: float) -> str:
        return f"{x:g}"

    if math.isinf(hi):
        return f">={fmt(lo)}h"
    return f"{fmt(lo)}-{fmt(hi)}h"


@dataclass(frozen=True)
class ScheduleRow:
    direction: str
    range_label: str
    n: int
    mean_depart_sod: float  # seconds of day
    mean_arrive_sod: float


def schedule_table(
    observations: Iterable[CommuteObservation],
    edges_h: Sequence[float] = (0.5, 1.0, 1.5),
) -> list[ScheduleRow]:
    """Mean depart/arrive clock times per commute-duration range.

    Operates on raw daily observations (clock times are not meaningful to
    average per user first).  Ranges are [0, e1), ..., [e_last, inf); empty
    ranges are omitted.
    """
    edges = [float(e) for e in edges_h]
    if any(b <= a for a, b in zip(edges, edges[1:])) or (edges and edges[0] <= 0):
        raise ValueError("range edges must be positive and strictly increasing")
    bounds = [0.0] + edges + [math.inf]
    labels = [_band_label(lo, hi) for lo, hi in zip(bounds, bounds[1:])]

    acc: dict[tuple[str, int], tuple[list[float], list[float]]] = defaultdict(
        lambda: ([], [])
    )
    for obs in observations:
        band = sum(1 for e in edges if obs.duration_h >= e)
        departs, arrives = acc[(obs.direction, band)]
        departs.append(clock.seconds_of_day(obs.depart_ts))
        arrives.append(clock.seconds_of_day(obs.arrive_ts))

    rows = []
    for direction in DIRECTIONS:
        for band, label in enumerate(labels):
            entry = acc.get((direction, band))
            if entry is None:
                continue
            departs, arrives = entry
            rows.append(
                ScheduleRow(
                    direction=direction,
                    range_label=label,
                    n=len(departs),
                    mean_depart_sod=math.fsum(departs) / len(departs),
                    mean_arrive_sod=math.fsum(arrives) / len(arrives),
                )
            )
    return rows


@dataclass(frozen=True)
class MarchettiSummary:
    """Commute-time constants beyond a distance threshold plus the daily
    travel budget of the whole cohort."""

    threshold_km: float
    morning_constant_h: float | None
    night_constant_h: float | None
    daily_budget_h: float | None
    n_over_threshold: int
    n_budget_users: int


def marchetti_summary(
    summaries: Sequence[UserCommuteSummary], threshold_km: float = 18.0
) -> MarchettiSummary:
    """Long-distance commute constants and the population travel budget.

    Constants average per-user means over users strictly beyond the
    threshold; the budget averages (morning + night) over every user that
    has both directions, regardless of distance.
    """
    if not summaries:
        raise ValueError("no users to summarize")

    def mean_over(values: list[float]) -> float | None:
        return math.fsum(values) / len(values) if values else None

    over = [s for s in summaries if s.distance_km > threshold_km]
    morning = mean_over([s.mean_morning_h for s in over if s.mean_morning_h is not None])
    night = mean_over([s.mean_night_h for s in over if s.mean_night_h is not None])
    both = [
        s.mean_morning_h + s.mean_night_h
        for s in summaries
        if s.mean_morning_h is not None and s.mean_night_h is not None
    ]
    return MarchettiSummary(
        threshold_km=threshold_km,
        morning_constant_h=morning,
        night_constant_h=night,
        daily_budget_h=mean_over(both),
        n_over_threshold=len(over),
        n_budget_users=len(both),
    )


@dataclass(frozen=True)
class StatsConfig:
    """Knobs for the aggregate tables; defaults match the report layout."""

    bin_km: float = 3.0
    hist_edges_h: tuple[float, ...] = (0.25, 0.5, 1.0)
    cdf_grid_h: tuple[float, ...] = tuple(i / 10 for i in range(1, 31))
    schedule_edges_h: tuple[float, ...] = (0.5, 1.0, 1.5)
    threshold_km: float = 18.0

    def __post_init__(self) -> None:
        if not self.bin_km > 0:
            raise ValueError("bin_km must be positive")
        if not self.threshold_km >= 0:
            raise ValueError("threshold_km must be non-negative")


@dataclass(frozen=True)
class CohortStats:
    """All aggregates for one cohort, ready for serialization."""

    n_users: int
    group_counts: dict[str, int]
    group_proportions: dict[str, Fraction]
    mean_time: dict[str, list[tuple[float, float, int]]]
    cdf: dict[str, list[tuple[float, float]]]
    histograms: dict[str, dict[str, list[tuple[str, Fraction]]]]
    schedule: list[ScheduleRow]
    marchetti: MarchettiSummary


def compute_cohort_stats(
    summaries: Sequence[UserCommuteSummary],
    observations: Sequence[CommuteObservation],
    cfg: StatsConfig,
) -> CohortStats:
    """Evaluate every aggregate over one cohort."""
    proportions = group_proportions(summaries)
    counts: dict[str, int] = {g.label: 0 for g in DistanceGroup}
    for s in summaries:
        counts[classify_distance_group(s.distance_km).label] += 1

    mean_time = {}
    cdf = {}
    histograms = {}
    for direction in DIRECTIONS:
        mean_time[direction] = mean_time_by_bin(summaries, direction, cfg.bin_km)
        if any(_direction_mean(s, direction) is not None for s in summaries):
            cdf[direction] = time_cdf(summaries, direction, cfg.cdf_grid_h)
        else:
            cdf[direction] = []
        histograms[direction] = {
            group.label: bands
            for group, bands in group_histograms(
                summaries, direction, cfg.hist_edges_h
            ).items()
        }

    return CohortStats(
        n_users=len(summaries),
        group_counts=counts,
        group_proportions={g.label: f for g, f in proportions.items()},
        mean_time=mean_time,
        cdf=cdf,
        histograms=histograms,
        schedule=schedule_table(observations, cfg.schedule_edges_h),
        marchetti=marchetti_summary(summaries, cfg.threshold_km),
    )
