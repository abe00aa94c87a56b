"""Civil-time helper tests."""

import datetime as dt

import pytest
from hypothesis import given, strategies as st

from commutekit import clock


def test_epoch_day_zero():
    assert clock.day_number(dt.date(1970, 1, 1)) == 0
    assert clock.date_of_day(0) == dt.date(1970, 1, 1)


def test_known_weekdays():
    # 1970-01-01 was a Thursday; 2012-01-02 was a Monday.
    assert clock.weekday_of_day(0) == 3
    assert clock.weekday_of_day(clock.day_number(dt.date(2012, 1, 2))) == 0
    assert clock.weekday_of_day(clock.day_number(dt.date(2012, 1, 8))) == 6


@given(st.integers(min_value=0, max_value=200_000))
def test_weekday_matches_stdlib(day):
    assert clock.weekday_of_day(day) == clock.date_of_day(day).weekday()


@given(st.dates(min_value=dt.date(1970, 1, 1), max_value=dt.date(2200, 12, 31)))
def test_day_number_roundtrip(d):
    assert clock.date_of_day(clock.day_number(d)) == d


def test_parse_clock():
    assert clock.parse_clock("00:00") == 0
    assert clock.parse_clock("07:45") == 27900
    assert clock.parse_clock("19:00:30") == 68430
    assert clock.parse_clock("24:00") == clock.SECONDS_PER_DAY


@pytest.mark.parametrize("bad", ["7", "25:00", "12:60", "12:00:60", "24:00:01", "aa:bb"])
def test_parse_clock_rejects(bad):
    with pytest.raises(ValueError):
        clock.parse_clock(bad)


@given(st.integers(min_value=0, max_value=clock.SECONDS_PER_DAY - 1))
def test_clock_roundtrip(s):
    assert clock.parse_clock(clock.format_clock(s)) == s


def test_parse_timestamp_known_values():
    assert clock.parse_timestamp("1970-01-01T00:00:00") == 0
    assert clock.parse_timestamp("1970-01-02T00:00:01") == 86401
    # Cross-checked against the aware-UTC epoch arithmetic in the stdlib.
    want = int(dt.datetime(2012, 3, 5, 8, 30, 0, tzinfo=dt.timezone.utc).timestamp())
    assert clock.parse_timestamp("2012-03-05T08:30:00") == want


@pytest.mark.parametrize(
    "bad",
    [
        "2012-1-02T08:00:00",      # unpadded month
        "2012-01-02 08:00:00",     # space separator
        "2012-01-02T08:00",        # missing seconds
        "2012-01-02T08:00:00Z",    # trailing zone
        "2012-01-02T24:00:00",     # hour out of range
        "2012-01-02T08:60:00",
        "2012-02-30T08:00:00",     # impossible date
        "1969-12-31T23:59:59",     # before supported range
        "2201-01-01T00:00:00",     # after supported range
        "２012-01-02T08:00:00",    # full-width digit
    ],
)
def test_parse_timestamp_rejects(bad):
    with pytest.raises(ValueError):
        clock.parse_timestamp(bad)


@given(st.integers(min_value=clock.TS_MIN, max_value=clock.TS_MAX - 1))
def test_timestamp_roundtrip(ts):
    assert clock.parse_timestamp(clock.format_timestamp(ts)) == ts


@given(st.integers(min_value=0, max_value=clock.TS_MAX - 1))
def test_day_split_consistent(ts):
    d = clock.date_of_timestamp(ts)
    assert clock.timestamp(d, clock.seconds_of_day(ts)) == ts
