"""Per-day commute estimation from anchor records.

The estimator is deliberately simple: departure is the user's last record at
the origin anchor inside the commuting window, arrival the first record at
the destination anchor after it.  Because a user can only under-report their
presence at the anchors, the estimate never undershoots the true door-to-door
time; when records are emitted every E seconds while at an anchor, it also
never overshoots by more than 2 E.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Sequence

from . import clock, geo
from .anchors import AnchorSet
from .ingest import TowerSet
from .trajectory import DayTrajectory, TimeWindow

MORNING = "morning"
NIGHT = "night"


def default_morning_window() -> TimeWindow:
    return TimeWindow.from_clock("06:00", "10:00")


def default_night_window() -> TimeWindow:
    return TimeWindow.from_clock("17:00", "21:00")


@dataclass(frozen=True)
class CommuteWindows:
    morning: TimeWindow = field(default_factory=default_morning_window)
    night: TimeWindow = field(default_factory=default_night_window)

    def __post_init__(self) -> None:
        if self.morning.wraps or self.night.wraps:
            raise ValueError("commute windows must not wrap midnight")
        if self.morning.end > self.night.start:
            raise ValueError("morning window must precede the night window")


@dataclass(frozen=True)
class CommuteObservation:
    """One day's estimated directional commute."""

    user_id: str
    day: int
    direction: str
    depart_ts: int
    arrive_ts: int
    distance_km: float

    def __post_init__(self) -> None:
        if self.direction not in (MORNING, NIGHT):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.arrive_ts <= self.depart_ts:
            raise ValueError("arrival must come strictly after departure")
        if self.distance_km < 0:
            raise ValueError("negative commute distance")

    @property
    def duration_h(self) -> float:
        return (self.arrive_ts - self.depart_ts) / 3600.0

    @property
    def date(self) -> dt.date:
        return clock.date_of_day(self.day)


def _estimate(
    traj: DayTrajectory,
    origin_cell: str,
    dest_cell: str,
    window: TimeWindow,
    direction: str,
    distance_km: float,
) -> CommuteObservation | None:
    day_start = traj.day * clock.SECONDS_PER_DAY
    lo = day_start + window.start
    hi = day_start + window.end

    depart = None
    for ts, cell in traj.events:
        if lo <= ts < hi and cell == origin_cell:
            depart = ts  # keep overwriting: the last origin record wins
    if depart is None:
        return None
    arrive = None
    for ts, cell in traj.events:
        if depart < ts < hi and cell == dest_cell:
            arrive = ts
            break
    if arrive is None:
        return None

    obs = CommuteObservation(
        user_id=traj.user_id,
        day=traj.day,
        direction=direction,
        depart_ts=depart,
        arrive_ts=arrive,
        distance_km=distance_km,
    )
    assert window.contains(clock.seconds_of_day(obs.depart_ts))
    assert window.contains(clock.seconds_of_day(obs.arrive_ts))
    return obs


def morning_commute(
    traj: DayTrajectory, anchors: AnchorSet, w: CommuteWindows
) -> CommuteObservation | None:
    """Home-to-work estimate for one day, or None when unobservable.

    The last home record inside the morning window is the departure even if
    it follows a work record (a user popping back home restarts the clock);
    arrival is the first work record strictly after it.
    """
    return _estimate(
        traj, anchors.home_cell, anchors.work_cell, w.morning, MORNING, anchors.distance_km
    )


def night_commute(
    traj: DayTrajectory, anchors: AnchorSet, w: CommuteWindows
) -> CommuteObservation | None:
    """Work-to-home estimate for one day; mirror of morning_commute."""
    return _estimate(
        traj, anchors.work_cell, anchors.home_cell, w.night, NIGHT, anchors.distance_km
    )


def commute_distance(anchors: AnchorSet, tower_set: TowerSet) -> float:
    """Great-circle distance between the anchor towers, in km."""
    try:
        home = tower_set[anchors.home_cell].location
        work = tower_set[anchors.work_cell].location
    except KeyError as exc:
        raise ValueError(f"anchor cell missing from tower set: {exc}") from None
    return float(geo.haversine_km(home.lat, home.lon, work.lat, work.lon))


@dataclass(frozen=True)
class UserCommuteSummary:
    """Per-user averages over daily observations, one value per direction."""

    user_id: str
    distance_km: float
    mean_morning_h: float | None
    mean_night_h: float | None
    n_morning: int
    n_night: int

    def __post_init__(self) -> None:
        if (self.mean_morning_h is None) != (self.n_morning == 0):
            raise ValueError("morning mean must be present iff observations exist")
        if (self.mean_night_h is None) != (self.n_night == 0):
            raise ValueError("night mean must be present iff observations exist")


def summarize_user(
    observations: Sequence[CommuteObservation], distance_km: float
) -> UserCommuteSummary:
    """Average one user's observations per direction.

    Sums are compensated (math.fsum) so shard-and-merge pipelines reproduce
    the exact same doubles.
    """
    if not observations:
        raise ValueError("cannot summarize zero observations")
    users = {o.user_id for o in observations}
    if len(users) > 1:
        raise ValueError("observations mix users")

    def mean_for(direction: str) -> tuple[float | None, int]:
        durations = [o.duration_h for o in observations if o.direction == direction]
        if not durations:
            return None, 0
        return math.fsum(durations) / len(durations), len(durations)

    mean_m, n_m = mean_for(MORNING)
    mean_n, n_n = mean_for(NIGHT)
    return UserCommuteSummary(
        user_id=observations[0].user_id,
        distance_km=distance_km,
        mean_morning_h=mean_m,
        mean_night_h=mean_n,
        n_morning=n_m,
        n_night=n_n,
    )
