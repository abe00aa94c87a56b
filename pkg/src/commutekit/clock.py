"""Civil-time helpers.

All timestamps in this package are naive local civil time, stored as integer
seconds since 1970-01-01T00:00:00 local.  There is no timezone or DST
handling anywhere: the analysis windows are clock-of-day rules and the input
data carries no zone information.
"""

from __future__ import annotations

import datetime as dt
import re

SECONDS_PER_DAY = 86400

_EPOCH_ORDINAL = dt.date(1970, 1, 1).toordinal()
# 1970-01-01 was a Thursday (Monday == 0).
_EPOCH_WEEKDAY = 3

# ASCII digits only: re's \d would also admit Unicode digit characters.
_TS_RE = re.compile(r"[0-9]{4}-[0-9]{2}-[0-9]{2}T[0-9]{2}:[0-9]{2}:[0-9]{2}")
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"

# Supported civil range.  Keeping the year bounded lets the vectorized ingest
# path (datetime64 based) accept exactly the same strings as this module.
MIN_YEAR = 1970
MAX_YEAR = 2200
TS_MIN = 0
TS_MAX = (dt.date(MAX_YEAR + 1, 1, 1).toordinal() - dt.date(1970, 1, 1).toordinal()) * SECONDS_PER_DAY

# Tower files never repeat dates much, record files repeat them constantly;
# a per-date cache makes the row-level parser ~20x faster than strptime.
_DATE_CACHE: dict[str, int] = {}


def day_number(d: dt.date) -> int:
    """Days elapsed since the local epoch (1970-01-01 -> 0)."""
    return d.toordinal() - _EPOCH_ORDINAL


def date_of_day(day: int) -> dt.date:
    return dt.date.fromordinal(day + _EPOCH_ORDINAL)


def day_start(d: dt.date) -> int:
    """Timestamp of 00:00:00 on the given date."""
    return day_number(d) * SECONDS_PER_DAY


def timestamp(d: dt.date, seconds_of_day: int = 0) -> int:
    return day_start(d) + seconds_of_day


def date_of_timestamp(ts: int) -> dt.date:
    return date_of_day(ts // SECONDS_PER_DAY)


def seconds_of_day(ts: int) -> int:
    return ts % SECONDS_PER_DAY


def weekday_of_day(day: int) -> int:
    """Monday == 0 ... Sunday == 6, for an epoch day number."""
    return (day + _EPOCH_WEEKDAY) % 7


def parse_clock(text: str) -> int:
    """Parse ``HH:MM`` or ``HH:MM:SS`` into seconds of day."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad clock time {text!r}")
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    if not (0 <= h <= 24 and 0 <= m < 60 and 0 <= s < 60) or h * 3600 + m * 60 + s > SECONDS_PER_DAY:
        raise ValueError(f"bad clock time {text!r}")
    return h * 3600 + m * 60 + s


def format_clock(seconds: float) -> str:
    """Seconds of day -> ``HH:MM:SS`` (rounded to whole seconds)."""
    s = int(round(seconds)) % SECONDS_PER_DAY
    return f"{s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}"


def parse_timestamp(text: str) -> int:
    """Parse a strict ``YYYY-MM-DDTHH:MM:SS`` local timestamp.

    Raises ValueError for anything that deviates from the canonical,
    zero-padded 19-character form (this keeps the row-level parser and the
    vectorized pandas path byte-for-byte equivalent in what they accept).
    """
    if len(text) != 19 or not _TS_RE.fullmatch(text):
        raise ValueError(f"bad timestamp {text!r}")
    date_part = text[:10]
    base = _DATE_CACHE.get(date_part)
    if base is None:
        year = int(date_part[0:4])
        if not MIN_YEAR <= year <= MAX_YEAR:
            raise ValueError(f"timestamp year outside {MIN_YEAR}..{MAX_YEAR}: {text!r}")
        d = dt.date(year, int(date_part[5:7]), int(date_part[8:10]))
        base = day_start(d)
        _DATE_CACHE[date_part] = base
    hh, mm, ss = int(text[11:13]), int(text[14:16]), int(text[17:19])
    if hh > 23 or mm > 59 or ss > 59:
        raise ValueError(f"bad timestamp {text!r}")
    return base + hh * 3600 + mm * 60 + ss


def format_timestamp(ts: int) -> str:
    d = date_of_day(ts // SECONDS_PER_DAY)
    return d.isoformat() + "T" + format_clock(ts % SECONDS_PER_DAY)
