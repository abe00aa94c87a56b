"""Stay segments and per-day trajectories under the stay hypothesis.

A user is assumed to remain at the cell of their most recent record until a
record appears in a different cell.  A day's trajectory therefore starts at
the day's first record (time before it is unattributed: no backfill, the
user's whereabouts are unknown) and its last stay extends to 24:00.  Clock
windows that wrap midnight draw their pre-midnight portion from the previous
day's trajectory.

This module is the readable reference implementation; the pipeline engine
reproduces its semantics with array operations and is tested for agreement.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import clock
from .ingest import TrafficRecord

SECONDS_PER_DAY = clock.SECONDS_PER_DAY


@dataclass(frozen=True)
class TimeWindow:
    """A clock-of-day interval, half-open in seconds of day.

    ``end < start`` marks a window that wraps midnight.  When a wrapping
    window is evaluated "for day d" the portion before midnight comes from
    day d-1, so a 19:00-07:00 window means the night leading into day d.
    A same-day evening interval is expressed with end = 86400 ("24:00"),
    which does not wrap.
    """

    start: int
    end: int

    def __post_init__(self) -> None:
        if not 0 <= self.start < SECONDS_PER_DAY:
            raise ValueError(f"window start {self.start} outside a day")
        if not 0 < self.end <= SECONDS_PER_DAY:
            raise ValueError(f"window end {self.end} outside a day")
        if self.end == self.start:
            raise ValueError("zero-length window")

    @classmethod
    def from_clock(cls, start: str, end: str) -> "TimeWindow":
        return cls(clock.parse_clock(start), clock.parse_clock(end))

    @property
    def wraps(self) -> bool:
        return self.end < self.start

    @property
    def duration(self) -> int:
        if self.wraps:
            return SECONDS_PER_DAY - self.start + self.end
        return self.end - self.start

    def contains(self, seconds_of_day: int) -> bool:
        if self.wraps:
            return seconds_of_day >= self.start or seconds_of_day < self.end
        return self.start <= seconds_of_day < self.end

    def __str__(self) -> str:
        return f"{clock.format_clock(self.start)}-{clock.format_clock(self.end)}"


@dataclass(frozen=True)
class StaySegment:
    """A maximal interval spent at one cell, absolute timestamps, end exclusive."""

    cell_id: str
    start_ts: int
    end_ts: int

    def __post_init__(self) -> None:
        if self.end_ts <= self.start_ts:
            raise ValueError("empty stay segment")

    @property
    def duration(self) -> int:
        return self.end_ts - self.start_ts


@dataclass(frozen=True)
class DayTrajectory:
    """One user's movements on one calendar day.

    ``segments`` partition [first event, 24:00): they touch exactly and
    adjacent cells differ.  ``events`` are the deduplicated records of the
    day, strictly increasing in time; among same-timestamp records the last
    one in file order won, and ``n_conflicts`` counts how often that rule
    had to pick between different cells.  ``n_records`` counts raw accepted
    records, which is what the daily activity filter applies to.
    """

    user_id: str
    day: int
    segments: tuple[StaySegment, ...]
    events: tuple[tuple[int, str], ...]
    n_records: int
    n_conflicts: int = 0

    @property
    def date(self) -> dt.date:
        return clock.date_of_day(self.day)

    @classmethod
    def empty(cls, user_id: str, day: int) -> "DayTrajectory":
        """A day with no records: whereabouts entirely unknown."""
        return cls(user_id, day, (), (), 0)


def dedupe_events(
    records: Sequence[TrafficRecord],
) -> tuple[list[tuple[int, str]], int]:
    """Collapse a time-sorted record stream to strictly increasing events.

    Among records sharing a timestamp the last one wins.  Returns the events
    and the number of same-timestamp conflicts between different cells.
    """
    events: list[tuple[int, str]] = []
    conflicts = 0
    for rec in records:
        if events and events[-1][0] == rec.start_ts:
            if events[-1][1] != rec.cell_id:
                conflicts += 1
            events[-1] = (rec.start_ts, rec.cell_id)
        else:
            events.append((rec.start_ts, rec.cell_id))
    return events, conflicts


def build_day_trajectory(
    records: Sequence[TrafficRecord],
    *,
    user_id: str | None = None,
    day: int | None = None,
) -> DayTrajectory:
    """Build one user-day's trajectory from its time-sorted records.

    All records must share a user and a calendar day and be sorted by
    start_ts (ties allowed; later file order wins).  For an empty record
    list, ``user_id`` and ``day`` identify the empty trajectory.
    """
    if not records:
        if user_id is None or day is None:
            raise ValueError("empty day needs explicit user_id and day")
        return DayTrajectory.empty(user_id, day)

    rec_user = records[0].user_id
    rec_day = records[0].start_ts // SECONDS_PER_DAY
    if user_id is not None and user_id != rec_user:
        raise ValueError(f"records belong to {rec_user!r}, not {user_id!r}")
    if day is not None and day != rec_day:
        raise ValueError("records do not lie on the stated day")
    for prev, cur in zip(records, records[1:]):
        if cur.user_id != rec_user:
            raise ValueError("records mix users")
        if cur.start_ts < prev.start_ts:
            raise ValueError("records not sorted by start_ts")
    if records[-1].start_ts // SECONDS_PER_DAY != rec_day:
        raise ValueError("records span multiple days")

    events, conflicts = dedupe_events(records)
    day_end = (rec_day + 1) * SECONDS_PER_DAY
    segments: list[StaySegment] = []
    seg_start, seg_cell = events[0]
    for ts, cell in events[1:]:
        if cell != seg_cell:
            segments.append(StaySegment(seg_cell, seg_start, ts))
            seg_start, seg_cell = ts, cell
    segments.append(StaySegment(seg_cell, seg_start, day_end))

    return DayTrajectory(
        user_id=rec_user,
        day=rec_day,
        segments=tuple(segments),
        events=tuple(events),
        n_records=len(records),
        n_conflicts=conflicts,
    )


def build_day_trajectories(
    records: Iterable[TrafficRecord],
) -> dict[str, dict[int, DayTrajectory]]:
    """Group a record stream by user and day and build every trajectory.

    Input order is file order; records are stably sorted per user so that
    same-timestamp ties keep their file-order resolution.
    """
    per_user: dict[str, list[TrafficRecord]] = {}
    for rec in records:
        per_user.setdefault(rec.user_id, []).append(rec)

    out: dict[str, dict[int, DayTrajectory]] = {}
    for user_id, recs in per_user.items():
        recs.sort(key=lambda r: r.start_ts)
        days: dict[int, list[TrafficRecord]] = {}
        for rec in recs:
            days.setdefault(rec.start_ts // SECONDS_PER_DAY, []).append(rec)
        out[user_id] = {
            d: build_day_trajectory(day_recs) for d, day_recs in sorted(days.items())
        }
    return out


def clip_dwell(
    segments: Iterable[StaySegment], lo_ts: int, hi_ts: int
) -> dict[str, int]:
    """Seconds per cell inside [lo_ts, hi_ts), from clipped stay segments."""
    dwell: dict[str, int] = {}
    for seg in segments:
        overlap = min(seg.end_ts, hi_ts) - max(seg.start_ts, lo_ts)
        if overlap > 0:
            dwell[seg.cell_id] = dwell.get(seg.cell_id, 0) + overlap
    return dwell


def dwell_by_cell(
    traj: DayTrajectory,
    window: TimeWindow,
    prev_day: DayTrajectory | None = None,
) -> dict[str, int]:
    """Per-cell dwell seconds inside a clock window evaluated for traj's day.

    A wrapping window requires ``prev_day`` (pass an empty trajectory when
    that day has no records); its segments supply the pre-midnight portion.
    """
    day_start = traj.day * SECONDS_PER_DAY
    if not window.wraps:
        return clip_dwell(traj.segments, day_start + window.start, day_start + window.end)

    if prev_day is None:
        raise ValueError("wrapping window needs the previous day's trajectory")
    if prev_day.day != traj.day - 1:
        raise ValueError("prev_day is not the preceding calendar day")
    prev_start = prev_day.day * SECONDS_PER_DAY
    dwell = clip_dwell(prev_day.segments, prev_start + window.start, prev_start + SECONDS_PER_DAY)
    for cell, sec in clip_dwell(traj.segments, day_start, day_start + window.end).items():
        dwell[cell] = dwell.get(cell, 0) + sec
    return dwell


def dominant_location(
    dwell: Mapping[str, int], window: TimeWindow, fraction: float = 0.5
) -> str | None:
    """The cell holding at least ``fraction`` of the window, or None.

    Ties on maximal dwell break to the lexicographically smallest cell id,
    keeping the choice deterministic.  The epsilon absorbs float error when
    fraction * duration is not an integer.
    """
    if not dwell:
        return None
    best = max(dwell.values())
    if best < fraction * window.duration - 1e-9:
        return None
    return min(cell for cell, sec in dwell.items() if sec == best)
