"""User filtering and home/work anchor inference.

The cascade: a user's days first pass an activity filter (minimum records per
day, allowed weekdays); on each qualifying day the dominant overnight and
working-hours cells become daily anchor candidates; the user's anchors are
the most frequent daily candidates.  Users whose anchors sit on isolated
towers are rejected, since a lone tower's enormous catchment would poison
distance statistics.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from . import clock, geo
from .ingest import TowerSet
from .trajectory import (
    DayTrajectory,
    TimeWindow,
    dominant_location,
    dwell_by_cell,
)

# Rejection reason labels; every non-anchored user lands on exactly one.
REASON_NO_HOME = "no dominant home"
REASON_NO_WORK = "no dominant work"
REASON_ISOLATED = "isolated anchor"

WEEKDAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


@dataclass(frozen=True)
class FilterConfig:
    """Daily activity filter settings.

    ``min_daily_records`` is inclusive: a day with exactly that many records
    qualifies.  ``include_days`` holds weekday numbers (Monday == 0);
    commute windows are meaningless on non-working days, hence the default.
    """

    min_daily_records: int = 1500
    isolation_radius_km: float = geo.DEFAULT_ISOLATION_RADIUS_KM
    include_days: frozenset[int] = frozenset({0, 1, 2, 3, 4})

    def __post_init__(self) -> None:
        if self.min_daily_records < 1:
            raise ValueError("min_daily_records must be >= 1")
        if self.isolation_radius_km <= 0:
            raise ValueError("isolation_radius_km must be positive")
        if not self.include_days:
            raise ValueError("include_days must not be empty")
        if not all(0 <= d <= 6 for d in self.include_days):
            raise ValueError("weekday numbers run 0 (Mon) .. 6 (Sun)")


def default_home_window() -> TimeWindow:
    return TimeWindow.from_clock("19:00", "07:00")


def default_work_window() -> TimeWindow:
    return TimeWindow.from_clock("09:00", "18:00")


@dataclass(frozen=True)
class AnchorWindows:
    """Clock windows and dominance rule for anchor inference.

    At the defaults, dominance means >= 6 h of the wrapping 19:00-07:00
    night for home and >= 4.5 h of 09:00-18:00 for work.
    """

    home_window: TimeWindow = field(default_factory=default_home_window)
    work_window: TimeWindow = field(default_factory=default_work_window)
    dominance_fraction: float = 0.5

    def __post_init__(self) -> None:
        if not 0 < self.dominance_fraction <= 1:
            raise ValueError("dominance_fraction must lie in (0, 1]")
        if not self.home_window.wraps:
            raise ValueError("home window must wrap midnight")
        if self.work_window.wraps:
            raise ValueError("work window must not wrap midnight")


@dataclass(frozen=True)
class AnchorSet:
    """A user's inferred anchors plus their great-circle separation."""

    user_id: str
    home_cell: str
    work_cell: str
    qualifying_days: tuple[int, ...]
    distance_km: float

    def __post_init__(self) -> None:
        if not self.qualifying_days:
            raise ValueError("anchored user must have qualifying days")
        if self.distance_km < 0:
            raise ValueError("negative anchor distance")


def filter_active_days(
    daily_counts: Mapping[str, Mapping[int, int]], cfg: FilterConfig
) -> dict[str, set[int]]:
    """Qualifying days per user under the activity filter.

    ``daily_counts`` maps user -> day -> raw accepted record count.  Users
    with no qualifying day are absent from the result.
    """
    out: dict[str, set[int]] = {}
    for user_id, per_day in daily_counts.items():
        days = {
            day
            for day, n in per_day.items()
            if n >= cfg.min_daily_records
            and clock.weekday_of_day(day) in cfg.include_days
        }
        if days:
            out[user_id] = days
    return out


def _mode_candidate(candidates: Counter) -> str | None:
    if not candidates:
        return None
    top = max(candidates.values())
    return min(cell for cell, n in candidates.items() if n == top)


def infer_anchors(
    trajectories: Mapping[int, DayTrajectory],
    qualifying_days: set[int],
    windows: AnchorWindows,
    tower_set: TowerSet,
    isolated: frozenset[str],
) -> tuple[AnchorSet | None, str | None]:
    """Infer one user's anchors over their qualifying days.

    Per day, the dominant cell of each window becomes a candidate; the
    anchor is the most frequent candidate across days (ties break to the
    lexicographically smallest cell).  Returns (anchors, None) on success
    or (None, reason) when the user is rejected.  Home and work on the same
    tower is legitimate (distance 0, shortest distance group).
    """
    if not qualifying_days:
        raise ValueError("caller must supply at least one qualifying day")

    home_votes: Counter = Counter()
    work_votes: Counter = Counter()
    user_id = ""
    for day in sorted(qualifying_days):
        traj = trajectories.get(day)
        if traj is None:
            raise ValueError(f"qualifying day {day} has no trajectory")
        user_id = traj.user_id
        prev = trajectories.get(day - 1)
        if prev is None:
            prev = DayTrajectory.empty(traj.user_id, day - 1)
        home_dwell = dwell_by_cell(traj, windows.home_window, prev_day=prev)
        work_dwell = dwell_by_cell(traj, windows.work_window)
        home = dominant_location(home_dwell, windows.home_window, windows.dominance_fraction)
        work = dominant_location(work_dwell, windows.work_window, windows.dominance_fraction)
        if home is not None:
            home_votes[home] += 1
        if work is not None:
            work_votes[work] += 1

    home_cell = _mode_candidate(home_votes)
    if home_cell is None:
        return None, REASON_NO_HOME
    work_cell = _mode_candidate(work_votes)
    if work_cell is None:
        return None, REASON_NO_WORK
    if home_cell in isolated or work_cell in isolated:
        return None, REASON_ISOLATED

    home_loc = tower_set[home_cell].location
    work_loc = tower_set[work_cell].location
    return (
        AnchorSet(
            user_id=user_id,
            home_cell=home_cell,
            work_cell=work_cell,
            qualifying_days=tuple(sorted(qualifying_days)),
            distance_km=float(
                geo.haversine_km(home_loc.lat, home_loc.lon, work_loc.lat, work_loc.lon)
            ),
        ),
        None,
    )
