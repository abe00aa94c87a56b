"""Ingestion tests.

The load-bearing property here is that the row-level reference parser and the
columnar fast path accept exactly the same rows, in the same order, with the
same per-reason rejection tallies, for arbitrary (including hostile) input.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commutekit import ingest

TOWERS = b"cell_id,lat,lon\nT00001,39.9000000,116.4000000\nT00002,39.9100000,116.4100000\n"


@pytest.fixture(scope="module")
def tower_set():
    return ingest.parse_towers(TOWERS)


def make_records_csv(rows):
    return b"user_id,cell_id,start_time,end_time\n" + b"".join(rows)


def both_paths(data, tower_set):
    records, report = ingest.parse_records(data, tower_set)
    table = ingest.RecordTable.from_csv(data, tower_set)
    return records, report, table


def assert_paths_agree(data, tower_set):
    records, report, table = both_paths(data, tower_set)
    assert table.report.rows_total == report.rows_total
    assert table.report.rows_accepted == report.rows_accepted
    assert dict(table.report.counts) == dict(report.counts)
    got = [(r.user_id, r.cell_id, r.start_ts) for r in table.to_records()]
    want = [(r.user_id, r.cell_id, r.start_ts) for r in records]
    assert got == want
    # No row vanishes without a tally.
    assert report.rows_accepted + report.rows_rejected == report.rows_total
    return records, report


# -- tower files --------------------------------------------------------------


def test_parse_towers_basic(tower_set):
    assert len(tower_set) == 2
    assert tower_set.cell_ids == ("T00001", "T00002")
    assert tower_set["T00001"].location.lat == 39.9
    assert tower_set.index_of("T00002") == 1
    assert list(tower_set.indexer(["T00002", "nope", "T00001"])) == [1, -1, 0]


@pytest.mark.parametrize(
    "data",
    [
        b"wrong,header,here\nT1,0,0\n",
        b"cell_id,lat,lon\nT1,91.0,0\n",
        b"cell_id,lat,lon\nT1,0,181.0\n",
        b"cell_id,lat,lon\nT1,abc,0\n",
        b"cell_id,lat,lon\nT1,0,0\nT1,1,1\n",
        b"cell_id,lat,lon\n,0,0\n",
        b"cell_id,lat,lon\nT1,0,0,extra\n",
        b"cell_id,lat,lon\n",
    ],
)
def test_parse_towers_hard_errors(data):
    with pytest.raises(ingest.IngestError):
        ingest.parse_towers(data)


def test_parse_towers_skips_blank_lines():
    ts = ingest.parse_towers(b"cell_id,lat,lon\n\nT1,1.0,2.0\n  \n")
    assert len(ts) == 1


def test_tower_set_rejects_duplicates():
    t = ingest.CellTower("A", ingest.GeoPoint(0.0, 0.0))
    with pytest.raises(ingest.IngestError):
        ingest.TowerSet([t, t])


def test_geopoint_bounds():
    with pytest.raises(ValueError):
        ingest.GeoPoint(90.5, 0.0)
    with pytest.raises(ValueError):
        ingest.GeoPoint(0.0, -180.5)
    with pytest.raises(ValueError):
        ingest.GeoPoint(float("nan"), 0.0)


# -- record files: reference parser -------------------------------------------


def test_accepts_valid_rows(tower_set):
    data = make_records_csv(
        [
            b"u001,T00001,2012-01-02T08:00:00,2012-01-02T08:05:00\n",
            b"u001,T00002,2012-01-02T09:00:00,\n",
        ]
    )
    records, report = ingest.parse_records(data, tower_set)
    assert len(records) == 2
    assert report.rows_accepted == 2
    assert report.rows_rejected == 0
    assert records[0].end_ts == records[0].start_ts + 300
    assert records[1].end_ts is None


def test_rejection_reasons(tower_set):
    data = make_records_csv(
        [
            b"u001,T00001,2012-01-02T08:00:00,\n",
            b"u001,T00001\n",                                          # short row
            b"u001,T00001,2012-01-02T08:00:00,x,y\n",                  # long row
            b",T00001,2012-01-02T08:00:00,\n",                         # empty user
            b"u001,,2012-01-02T08:00:00,\n",                           # empty cell
            b"u001,T00001,2012-13-02T08:00:00,\n",                     # bad month
            b"u001,T00001,2012-01-02T08:00:00,2012-01-02T07:00:00\n",  # inverted
            b"u001,T09999,2012-01-02T08:00:00,\n",                     # unknown cell
        ]
    )
    _, report = ingest.parse_records(data, tower_set)
    assert report.rows_total == 8
    assert report.rows_accepted == 1
    assert dict(report.counts) == {
        ingest.REASON_MALFORMED: 4,
        ingest.REASON_BAD_TIMESTAMP: 1,
        ingest.REASON_INVERTED: 1,
        ingest.REASON_UNKNOWN_CELL: 1,
    }


def test_reason_precedence(tower_set):
    # A row can be wrong in several ways; the first failing check wins, so an
    # unknown cell with a bad timestamp counts as a timestamp rejection.
    data = make_records_csv([b"u001,T09999,2012-99-02T08:00:00,\n"])
    _, report = ingest.parse_records(data, tower_set)
    assert dict(report.counts) == {ingest.REASON_BAD_TIMESTAMP: 1}

    data = make_records_csv([b",T09999,2012-99-02T08:00:00,\n"])
    _, report = ingest.parse_records(data, tower_set)
    assert dict(report.counts) == {ingest.REASON_MALFORMED: 1}


def test_header_required(tower_set):
    with pytest.raises(ingest.IngestError):
        ingest.parse_records(b"nope\n", tower_set)
    with pytest.raises(ingest.IngestError):
        ingest.RecordTable.from_csv(b"nope\n", tower_set)


# -- fast path equivalence ----------------------------------------------------


def test_paths_agree_on_showcase(tower_set):
    data = make_records_csv(
        [
            b"u002,T00001,2012-01-02T08:00:00,2012-01-02T08:05:00\n",
            b"u001,T00002,2012-01-02T09:00:00,\n",
            b"u001,T00001\n",
            b"u001,T00001,2012-01-02T08:00:00,extra,fields\n",
            b",T00001,2012-01-02T08:00:00,\n",
            b"u001,T00001,2012-1-02T08:00:00,\n",
            b"u001,T00001,2012-01-02T08:00:00,2011-01-01T00:00:00\n",
            b"u001,T09999,2012-01-02T08:00:00,\n",
            b"\n",
            b"   \n",
            b"u003,T00002,2012-01-02T10:00:00,\n",
        ]
    )
    records, report = assert_paths_agree(data, tower_set)
    assert report.rows_total == 9  # blank lines are not rows
    assert report.rows_accepted == 3
    assert [r.user_id for r in records] == ["u002", "u001", "u003"]


def test_paths_agree_no_trailing_newline(tower_set):
    data = make_records_csv([b"u001,T00001,2012-01-02T08:00:00,"])
    assert_paths_agree(data, tower_set)


def test_paths_agree_crlf(tower_set):
    data = b"user_id,cell_id,start_time,end_time\r\nu001,T00001,2012-01-02T08:00:00,\r\n"
    records, report = assert_paths_agree(data, tower_set)
    assert report.rows_accepted == 1


def test_empty_body(tower_set):
    for data in (b"user_id,cell_id,start_time,end_time\n", b"user_id,cell_id,start_time,end_time"):
        table = ingest.RecordTable.from_csv(data, tower_set)
        assert len(table) == 0
        assert table.report.rows_total == 0


field_chars = st.text(
    alphabet=st.characters(blacklist_characters=",\r\n", min_codepoint=32, max_codepoint=126),
    max_size=12,
)
ts_like = st.one_of(
    st.just("2012-01-02T08:00:00"),
    st.just("2012-01-02T23:59:59"),
    st.just("2012-01-02T24:00:00"),
    st.just("2012-02-30T08:00:00"),
    st.just("1969-12-31T23:59:59"),
    st.just("2012-01-02 08:00:00"),
    st.just("2012-1-2T8:0:0"),
    field_chars,
)
row_fields = st.one_of(
    # Mostly plausible 4-field rows with adversarial timestamps and cells.
    st.tuples(
        st.sampled_from(["u001", "u002", ""]),
        st.sampled_from(["T00001", "T00002", "T09999", ""]),
        ts_like,
        st.one_of(st.just(""), ts_like),
    ).map(list),
    # Arbitrary field counts.
    st.lists(field_chars, min_size=1, max_size=6),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(row_fields, max_size=12))
def test_paths_agree_fuzzed(tower_set, rows):
    data = make_records_csv([(",".join(f).encode()) + b"\n" for f in rows])
    assert_paths_agree(data, tower_set)


def test_from_records_roundtrip(tower_set):
    records = [
        ingest.TrafficRecord("b", "T00002", 100),
        ingest.TrafficRecord("a", "T00001", 50),
        ingest.TrafficRecord("b", "T00001", 200),
    ]
    table = ingest.RecordTable.from_records(records, tower_set)
    assert list(table.user_ids) == ["a", "b"]
    assert list(table.user_idx) == [1, 0, 1]
    back = table.to_records()
    assert [(r.user_id, r.cell_id, r.start_ts) for r in back] == [
        ("b", "T00002", 100),
        ("a", "T00001", 50),
        ("b", "T00001", 200),
    ]


def test_report_merge():
    a = ingest.RejectionReport(rows_total=5, rows_accepted=3)
    a.add(ingest.REASON_MALFORMED)
    a.add(ingest.REASON_MALFORMED)
    b = ingest.RejectionReport(rows_total=2, rows_accepted=1)
    b.add(ingest.REASON_UNKNOWN_CELL)
    a.merge(b)
    assert a.rows_total == 7
    assert a.rows_accepted == 4
    assert a.rows_rejected == 3
    assert a.to_csv() == "reason,count\nmalformed row,2\nunknown cell,1\n"


def test_traffic_record_validation():
    with pytest.raises(ValueError):
        ingest.TrafficRecord("u", "c", 100, 99)
