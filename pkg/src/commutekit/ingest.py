"""Parsing and validation of tower and traffic-record CSV files.

Two record-parsing paths are provided with identical acceptance semantics:

* :func:`parse_records` -- row-level reference parser yielding typed
  :class:`TrafficRecord` values; the readable contract implementation.
* :meth:`RecordTable.from_csv` -- columnar fast path (pandas + numpy byte
  offset math) used by the pipeline for large files.

Both reject invalid rows for the same labelled reasons; an equivalence test
keeps them honest.  Neither path drops a row silently: every input row is
either accepted or tallied under a rejection reason.
"""

from __future__ import annotations

import csv
import io
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

import numpy as np
import pandas as pd

from . import clock

Source = Union[str, "os.PathLike[str]", bytes, IO[bytes]]

TOWER_HEADER = "cell_id,lat,lon"
RECORD_HEADER = "user_id,cell_id,start_time,end_time"

# Rejection reason labels shared by both parsing paths.
REASON_MALFORMED = "malformed row"
REASON_BAD_TIMESTAMP = "bad timestamp"
REASON_INVERTED = "inverted interval"
REASON_UNKNOWN_CELL = "unknown cell"


class IngestError(ValueError):
    """Hard ingest failure: unreadable stream, bad header, invalid tower file."""


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class CellTower:
    cell_id: str
    location: GeoPoint

    def __post_init__(self) -> None:
        if not self.cell_id:
            raise ValueError("empty cell_id")


class TowerSet:
    """An immutable keyed collection of cell towers.

    Coordinate arrays (sorted by cell_id) are exposed for the vectorized
    geometry and pipeline code; ``index_of`` maps an id to its array slot.
    """

    def __init__(self, towers: Iterable[CellTower]):
        mapping: dict[str, CellTower] = {}
        for tower in towers:
            if tower.cell_id in mapping:
                raise IngestError(f"duplicate cell_id {tower.cell_id!r}")
            mapping[tower.cell_id] = tower
        if not mapping:
            raise IngestError("tower set is empty")
        self._towers = mapping
        self.cell_ids: tuple[str, ...] = tuple(sorted(mapping))
        self._pool = pd.Index(self.cell_ids)
        self.lat = np.array([mapping[c].location.lat for c in self.cell_ids])
        self.lon = np.array([mapping[c].location.lon for c in self.cell_ids])

    def __len__(self) -> int:
        return len(self._towers)

    def __contains__(self, cell_id: str) -> bool:
        return cell_id in self._towers

    def __getitem__(self, cell_id: str) -> CellTower:
        return self._towers[cell_id]

    def __iter__(self):
        return (self._towers[c] for c in self.cell_ids)

    def index_of(self, cell_id: str) -> int:
        return int(self._pool.get_loc(cell_id))

    def indexer(self, cell_ids) -> np.ndarray:
        """Vectorized ``index_of``; unknown ids map to -1."""
        return self._pool.get_indexer(cell_ids)

    @property
    def towers(self) -> dict[str, CellTower]:
        return dict(self._towers)


@dataclass(frozen=True)
class TrafficRecord:
    """One network event: a user seen at a cell at a point in time.

    ``end_ts`` is advisory only; segmentation keys exclusively on ``start_ts``.
    """

    user_id: str
    cell_id: str
    start_ts: int
    end_ts: int | None = None

    def __post_init__(self) -> None:
        if self.end_ts is not None and self.end_ts < self.start_ts:
            raise ValueError("end_ts precedes start_ts")


@dataclass
class RejectionReport:
    """Per-reason tally of rejected rows."""

    counts: Counter = field(default_factory=Counter)
    rows_total: int = 0
    rows_accepted: int = 0

    @property
    def rows_rejected(self) -> int:
        return sum(self.counts.values())

    def add(self, reason: str) -> None:
        self.counts[reason] += 1

    def merge(self, other: "RejectionReport") -> None:
        self.counts.update(other.counts)
        self.rows_total += other.rows_total
        self.rows_accepted += other.rows_accepted

    def to_csv(self) -> str:
        lines = ["reason,count"]
        lines += [f"{reason},{n}" for reason, n in sorted(self.counts.items())]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def _open_text(source: Source) -> io.TextIOBase:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline="")
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def _split_csv_line(line: str) -> list[str]:
    # The formats are plain comma-separated with no quoting; a straight split
    # keeps the reference parser bit-compatible with the fast path.
    return line.rstrip("\r\n").split(",")


def parse_towers(source: Source) -> TowerSet:
    """Parse a tower CSV (header ``cell_id,lat,lon``) into a TowerSet.

    Any malformed row, out-of-range coordinate, or duplicate cell_id is a hard
    error naming the offending line; tower files are small and must be clean.
    """
    towers: dict[str, CellTower] = {}
    with _open_text(source) as fh:
        header = fh.readline()
        if header.rstrip("\r\n") != TOWER_HEADER:
            raise IngestError(f"tower file header must be {TOWER_HEADER!r}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = _split_csv_line(line)
            if len(parts) != 3:
                raise IngestError(f"line {lineno}: expected 3 columns, got {len(parts)}")
            cell_id, lat_s, lon_s = parts
            if not cell_id:
                raise IngestError(f"line {lineno}: empty cell_id")
            try:
                lat, lon = float(lat_s), float(lon_s)
            except ValueError:
                raise IngestError(f"line {lineno}: unparsable coordinate") from None
            try:
                point = GeoPoint(lat, lon)
            except ValueError as exc:
                raise IngestError(f"line {lineno}: {exc}") from None
            if cell_id in towers:
                raise IngestError(f"line {lineno}: duplicate cell_id {cell_id!r}")
            towers[cell_id] = CellTower(cell_id, point)
    if not towers:
        raise IngestError("tower file contains no towers")
    return TowerSet(towers.values())


def parse_records(
    source: Source, tower_set: TowerSet
) -> tuple[list[TrafficRecord], RejectionReport]:
    """Row-level record parser.

    Valid rows are returned in file order.  Invalid rows are tallied per
    reason in the report and skipped; only an unreadable stream or a missing
    header is a hard error.
    """
    records: list[TrafficRecord] = []
    report = RejectionReport()
    with _open_text(source) as fh:
        header = fh.readline()
        if header.rstrip("\r\n") != RECORD_HEADER:
            raise IngestError(f"record file header must be {RECORD_HEADER!r}")
        for line in fh:
            if not line.strip():
                continue
            report.rows_total += 1
            parts = _split_csv_line(line)
            if len(parts) != 4 or not parts[0] or not parts[1]:
                report.add(REASON_MALFORMED)
                continue
            user_id, cell_id, start_s, end_s = parts
            try:
                start_ts = clock.parse_timestamp(start_s)
            except ValueError:
                report.add(REASON_BAD_TIMESTAMP)
                continue
            end_ts: int | None = None
            if end_s:
                try:
                    end_ts = clock.parse_timestamp(end_s)
                except ValueError:
                    report.add(REASON_BAD_TIMESTAMP)
                    continue
                if end_ts < start_ts:
                    report.add(REASON_INVERTED)
                    continue
            if cell_id not in tower_set:
                report.add(REASON_UNKNOWN_CELL)
                continue
            report.rows_accepted += 1
            records.append(TrafficRecord(user_id, cell_id, start_ts, end_ts))
    return records, report


@dataclass
class _LineScan:
    """Byte-offset layout of the data body: one entry per physical line."""

    starts: np.ndarray  # content start offset
    ends: np.ndarray  # content end offset (excludes \r and \n)
    commas: np.ndarray  # comma count within the content span
    comma_pos: np.ndarray  # offsets of every comma in the body
    comma_base: np.ndarray  # index into comma_pos of each line's first comma
    blank: np.ndarray  # bool: line is empty or whitespace-only


def _scan_lines(body: bytes) -> _LineScan:
    arr = np.frombuffer(body, dtype=np.uint8)
    nl = np.flatnonzero(arr == 0x0A)
    if len(body) and body[-1:] != b"\n":
        ends = np.append(nl, len(body))
    else:
        ends = nl
    starts = np.empty_like(ends)
    if len(starts):
        starts[0] = 0
        starts[1:] = ends[:-1] + 1
    # Trim a trailing \r so CRLF files behave like LF files.
    has_cr = (ends > starts) & (arr[np.maximum(ends - 1, 0)] == 0x0D)
    ends = ends - has_cr

    comma_pos = np.flatnonzero(arr == 0x2C)
    comma_base = np.searchsorted(comma_pos, starts)
    commas = np.searchsorted(comma_pos, ends) - comma_base

    blank = ends == starts
    # A non-empty line with no commas could still be whitespace-only; such
    # lines are rare, so check them individually.
    for i in np.flatnonzero(~blank & (commas == 0)):
        if not body[starts[i] : ends[i]].strip():
            blank[i] = True
    return _LineScan(starts, ends, commas, comma_pos, comma_base, blank)


@dataclass
class RecordTable:
    """Columnar view of accepted traffic records.

    ``cell_idx`` indexes into ``tower_set.cell_ids``; ``user_idx`` indexes
    into the lexicographically sorted ``user_ids`` pool.  Row order is file
    order.
    """

    user_ids: np.ndarray  # unicode pool, sorted
    user_idx: np.ndarray  # int32, per record
    cell_idx: np.ndarray  # int32, per record
    t: np.ndarray  # int64 epoch seconds, per record
    tower_set: TowerSet
    report: RejectionReport

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_csv(cls, source: Source, tower_set: TowerSet) -> "RecordTable":
        """Vectorized record ingestion, equivalent to :func:`parse_records`.

        Field boundaries come from comma offsets in the raw byte buffer, so
        malformed rows (wrong column count, empty required field, wrong
        timestamp length) are classified without materializing row objects.
        pandas supplies field contents for the surviving rows.  If the two
        layers ever disagree on row accounting, the function falls back to
        the reference parser rather than guess.
        """
        data = _read_bytes(source)
        newline = data.find(b"\n")
        header = data if newline < 0 else data[:newline]
        if header.rstrip(b"\r").decode("utf-8", "replace") != RECORD_HEADER:
            raise IngestError(f"record file header must be {RECORD_HEADER!r}")
        if newline < 0:
            return cls._empty(tower_set, RejectionReport())
        body = data[newline + 1 :]

        scan = _scan_lines(body)
        nonblank = ~scan.blank
        report = RejectionReport(rows_total=int(nonblank.sum()))
        if report.rows_total == 0:
            return cls._empty(tower_set, report)

        # pandas keeps rows with <= 4 fields (padding short ones) and skips
        # longer ones under on_bad_lines="skip".
        kept = nonblank & (scan.commas <= 3)
        n_malformed = int((nonblank & (scan.commas != 3)).sum())

        try:
            df = pd.read_csv(
                io.BytesIO(body),
                header=None,
                names=["user_id", "cell_id", "start_time", "end_time"],
                dtype=str,
                keep_default_na=False,
                skip_blank_lines=True,
                on_bad_lines="skip",
                quoting=csv.QUOTE_NONE,
            )
        except pd.errors.EmptyDataError:
            df = pd.DataFrame(
                {k: pd.Series(dtype=str) for k in ("user_id", "cell_id", "start_time", "end_time")}
            )
        if len(df) != int(kept.sum()):
            records, ref_report = parse_records(data, tower_set)
            return cls.from_records(records, tower_set, ref_report)

        ok = scan.commas[np.flatnonzero(kept)] == 3  # mask over df rows

        # Field spans for well-formed rows, from the comma offsets.
        lines3 = np.flatnonzero(kept)[ok]
        base = scan.comma_base[lines3]
        c1 = scan.comma_pos[base]
        c2 = scan.comma_pos[base + 1]
        c3 = scan.comma_pos[base + 2]
        len_user = c1 - scan.starts[lines3]
        len_cell = c2 - c1 - 1
        len_start = c3 - c2 - 1
        len_end = scan.ends[lines3] - c3 - 1

        field_ok = (len_user > 0) & (len_cell > 0)
        n_malformed += int((~field_ok).sum())
        if n_malformed:
            report.counts[REASON_MALFORMED] = n_malformed
        ok[np.flatnonzero(ok)[~field_ok]] = False

        start_dt = pd.to_datetime(
            df["start_time"], format=clock.TIMESTAMP_FORMAT, errors="coerce"
        )
        start_sec = np.full(len(df), np.int64(-1))
        sv = start_dt.values
        parsed = ~pd.isna(sv)
        start_sec[parsed] = sv[parsed].astype("datetime64[s]").astype(np.int64)
        start_valid = (start_sec >= clock.TS_MIN) & (start_sec < clock.TS_MAX)

        end_dt = pd.to_datetime(
            df["end_time"], format=clock.TIMESTAMP_FORMAT, errors="coerce"
        )
        end_sec = np.full(len(df), np.int64(-1))
        ev = end_dt.values
        parsed = ~pd.isna(ev)
        end_sec[parsed] = ev[parsed].astype("datetime64[s]").astype(np.int64)
        end_valid = (end_sec >= clock.TS_MIN) & (end_sec < clock.TS_MAX)

        rows_ok = np.flatnonzero(ok)  # df row positions still in play
        has_end = len_end[field_ok] > 0
        ts_ok = (len_start[field_ok] == 19) & start_valid[rows_ok]
        ts_ok &= ~has_end | ((len_end[field_ok] == 19) & end_valid[rows_ok])
        n_bad_ts = int((~ts_ok).sum())
        if n_bad_ts:
            report.counts[REASON_BAD_TIMESTAMP] = n_bad_ts

        rows_ok = rows_ok[ts_ok]
        has_end = has_end[ts_ok]
        inverted = has_end & (end_sec[rows_ok] < start_sec[rows_ok])
        n_inverted = int(inverted.sum())
        if n_inverted:
            report.counts[REASON_INVERTED] = n_inverted
        rows_ok = rows_ok[~inverted]

        cell_codes = tower_set.indexer(df["cell_id"].values[rows_ok])
        known = cell_codes >= 0
        n_unknown = int((~known).sum())
        if n_unknown:
            report.counts[REASON_UNKNOWN_CELL] = n_unknown
        rows_ok = rows_ok[known]
        cell_codes = cell_codes[known]

        report.rows_accepted = len(rows_ok)

        users = df["user_id"].values[rows_ok]
        codes, uniques = pd.factorize(users)
        order = np.argsort(np.asarray(uniques, dtype=object), kind="stable")
        rank = np.empty(len(order), dtype=np.int32)
        rank[order] = np.arange(len(order), dtype=np.int32)
        return cls(
            user_ids=np.asarray(uniques, dtype=object)[order],
            user_idx=rank[codes] if len(order) else np.array([], dtype=np.int32),
            cell_idx=cell_codes.astype(np.int32),
            t=start_sec[rows_ok],
            tower_set=tower_set,
            report=report,
        )

    @classmethod
    def _empty(cls, tower_set: TowerSet, report: RejectionReport) -> "RecordTable":
        return cls(
            user_ids=np.array([], dtype=object),
            user_idx=np.array([], dtype=np.int32),
            cell_idx=np.array([], dtype=np.int32),
            t=np.array([], dtype=np.int64),
            tower_set=tower_set,
            report=report,
        )

    @classmethod
    def from_records(
        cls,
        records: Iterable[TrafficRecord],
        tower_set: TowerSet,
        report: RejectionReport | None = None,
    ) -> "RecordTable":
        records = list(records)
        if report is None:
            report = RejectionReport(rows_total=len(records), rows_accepted=len(records))
        if not records:
            return cls._empty(tower_set, report)
        users = np.array([r.user_id for r in records], dtype=object)
        user_pool, user_idx = np.unique(users, return_inverse=True)
        return cls(
            user_ids=user_pool,
            user_idx=user_idx.astype(np.int32),
            cell_idx=np.array(
                [tower_set.index_of(r.cell_id) for r in records], dtype=np.int32
            ),
            t=np.array([r.start_ts for r in records], dtype=np.int64),
            tower_set=tower_set,
            report=report,
        )

    def to_records(self) -> list[TrafficRecord]:
        cells = self.tower_set.cell_ids
        return [
            TrafficRecord(str(self.user_ids[u]), cells[c], int(t))
            for u, c, t in zip(self.user_idx, self.cell_idx, self.t)
        ]
