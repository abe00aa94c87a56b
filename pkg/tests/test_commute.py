"""Commute estimator tests."""

import datetime as dt

import pytest

from commutekit import clock
from commutekit.anchors import AnchorSet
from commutekit.commute import (
    MORNING,
    NIGHT,
    CommuteObservation,
    CommuteWindows,
    commute_distance,
    morning_commute,
    night_commute,
    summarize_user,
)
from commutekit.ingest import CellTower, GeoPoint, TowerSet, TrafficRecord
from commutekit.trajectory import TimeWindow, build_day_trajectory

DAY = clock.day_number(dt.date(2012, 1, 2))

ANCHORS = AnchorSet(
    user_id="u001",
    home_cell="H0001",
    work_cell="W0001",
    qualifying_days=(DAY,),
    distance_km=5.0,
)


def traj(*pairs):
    return build_day_trajectory(
        [TrafficRecord("u001", cell, DAY * clock.SECONDS_PER_DAY + clock.parse_clock(hms))
         for hms, cell in pairs]
    )


def sod(ts):
    return clock.seconds_of_day(ts)


def test_basic_morning_estimate():
    t = traj(("06:30", "H0001"), ("07:50", "H0001"), ("08:20", "W0001"), ("09:00", "W0001"))
    obs = morning_commute(t, ANCHORS, CommuteWindows())
    assert obs is not None
    assert sod(obs.depart_ts) == clock.parse_clock("07:50")
    assert sod(obs.arrive_ts) == clock.parse_clock("08:20")
    assert obs.duration_h == 0.5
    assert obs.direction == MORNING
    assert obs.distance_km == 5.0


def test_last_home_record_wins():
    # A home record after a work sighting restarts the clock.
    t = traj(("07:00", "H0001"), ("07:30", "W0001"), ("08:00", "H0001"), ("08:40", "W0001"))
    obs = morning_commute(t, ANCHORS, CommuteWindows())
    assert sod(obs.depart_ts) == clock.parse_clock("08:00")
    assert sod(obs.arrive_ts) == clock.parse_clock("08:40")


def test_records_outside_window_ignored():
    # Home at 05:59 precedes the morning window; work at 10:00 misses it
    # (half-open). Neither endpoint can come from outside 06:00-10:00.
    t = traj(("05:59", "H0001"), ("10:00", "W0001"))
    assert morning_commute(t, ANCHORS, CommuteWindows()) is None

    t = traj(("06:00", "H0001"), ("09:59", "W0001"))
    obs = morning_commute(t, ANCHORS, CommuteWindows())
    assert obs.duration_h == pytest.approx(3.983333333333333)


def test_no_home_record_no_estimate():
    t = traj(("08:00", "W0001"), ("09:00", "W0001"))
    assert morning_commute(t, ANCHORS, CommuteWindows()) is None


def test_no_arrival_after_departure_no_estimate():
    # Work seen only before the final home record.
    t = traj(("07:00", "W0001"), ("08:00", "H0001"))
    assert morning_commute(t, ANCHORS, CommuteWindows()) is None


def test_transit_records_do_not_disturb():
    t = traj(("07:30", "H0001"), ("07:45", "X0001"), ("07:55", "X0001"), ("08:10", "W0001"))
    obs = morning_commute(t, ANCHORS, CommuteWindows())
    assert sod(obs.depart_ts) == clock.parse_clock("07:30")
    assert sod(obs.arrive_ts) == clock.parse_clock("08:10")


def test_night_mirror():
    t = traj(("17:40", "W0001"), ("18:40", "H0001"))
    obs = night_commute(t, ANCHORS, CommuteWindows())
    assert obs.direction == NIGHT
    assert sod(obs.depart_ts) == clock.parse_clock("17:40")
    assert sod(obs.arrive_ts) == clock.parse_clock("18:40")
    assert morning_commute(t, ANCHORS, CommuteWindows()) is None


def test_same_timestamp_pair_yields_nothing():
    # Depart and arrive cannot coincide: "after" is strict, and dedupe keeps
    # one event per timestamp anyway.
    t = traj(("08:00", "H0001"), ("08:00", "W0001"))
    assert morning_commute(t, ANCHORS, CommuteWindows()) is None


def test_windows_validated():
    with pytest.raises(ValueError):
        CommuteWindows(morning=TimeWindow.from_clock("22:00", "02:00"))
    with pytest.raises(ValueError):
        CommuteWindows(
            morning=TimeWindow.from_clock("06:00", "12:00"),
            night=TimeWindow.from_clock("11:00", "21:00"),
        )


def test_observation_validation():
    with pytest.raises(ValueError):
        CommuteObservation("u", DAY, "sideways", 0, 10, 1.0)
    with pytest.raises(ValueError):
        CommuteObservation("u", DAY, MORNING, 10, 10, 1.0)
    with pytest.raises(ValueError):
        CommuteObservation("u", DAY, MORNING, 0, 10, -1.0)


def test_commute_distance():
    ts = TowerSet(
        [
            CellTower("H0001", GeoPoint(0.0, 0.0)),
            CellTower("W0001", GeoPoint(1.0, 0.0)),
        ]
    )
    d = commute_distance(ANCHORS, ts)
    assert d == pytest.approx(111.1950, abs=1e-3)  # one degree of latitude
    with pytest.raises(ValueError):
        commute_distance(
            AnchorSet("u", "H0001", "Z9999", (DAY,), 0.0), ts
        )


def obs(direction, minutes, day=DAY):
    base = day * clock.SECONDS_PER_DAY + clock.parse_clock("07:00")
    return CommuteObservation("u001", day, direction, base, base + minutes * 60, 5.0)


def test_summarize_user_means():
    s = summarize_user([obs(MORNING, 30), obs(MORNING, 42, DAY + 1), obs(NIGHT, 36)], 5.0)
    assert s.mean_morning_h == 0.6
    assert s.n_morning == 2
    assert s.mean_night_h == 0.6
    assert s.n_night == 1
    assert s.distance_km == 5.0


def test_summarize_user_one_direction():
    s = summarize_user([obs(MORNING, 30)], 5.0)
    assert s.mean_night_h is None
    assert s.n_night == 0


def test_summarize_user_validation():
    with pytest.raises(ValueError):
        summarize_user([], 5.0)
    other = CommuteObservation("u002", DAY, MORNING, 0, 600, 5.0)
    with pytest.raises(ValueError):
        summarize_user([obs(MORNING, 30), other], 5.0)
