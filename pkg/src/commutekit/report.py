"""Plot-ready report bundle: one CSV per figure or table, plus summary.json.

Values are written with shortest-roundtrip float formatting, so a bundle is
byte-identical across runs whenever the computed statistics are identical.
compare_bundles flattens two summary files into dotted keys and checks
per-key absolute differences against a tolerance map.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import clock
from .commute import CommuteObservation
from .stats import CohortStats

SCHEMA_VERSION = 1

TABLE1 = "table1_proportions.csv"
FIG2 = "fig2_mean_time.csv"
FIG3 = "fig3_cdf.csv"
FIG4 = "fig4_histograms.csv"
FIG5 = "fig5_schedule.csv"
TABLE3 = "table3_marchetti.csv"
SUMMARY = "summary.json"
FUNNEL = "filter_funnel.csv"
REJECTIONS = "rejection_report.csv"
OBSERVATIONS = "observations.csv"

STAT_FILES = (TABLE1, FIG2, FIG3, FIG4, FIG5, TABLE3, SUMMARY)


def _num(x) -> str:
    if isinstance(x, Fraction):
        x = float(x)
    return repr(float(x)) if isinstance(x, float) else str(x)


def _write(path: Path, lines: Iterable[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_funnel(path: Path, funnel: Sequence[tuple[str, int]]) -> None:
    _write(path, ["stage,users_remaining", *(f"{s},{n}" for s, n in funnel)])


def write_observations(path: Path, observations: Sequence[CommuteObservation]) -> None:
    lines = ["user_id,date,direction,depart,arrive,duration_h,distance_km"]
    for o in observations:
        lines.append(
            f"{o.user_id},{o.date.isoformat()},{o.direction},"
            f"{clock.format_timestamp(o.depart_ts)},{clock.format_timestamp(o.arrive_ts)},"
            f"{_num(o.duration_h)},{_num(o.distance_km)}"
        )
    _write(path, lines)


def write_stat_files(out_dir: Path, stats: CohortStats) -> None:
    lines = ["group,count,proportion"]
    for label, count in stats.group_counts.items():
        lines.append(f"{label},{count},{_num(stats.group_proportions[label])}")
    _write(out_dir / TABLE1, lines)

    lines = ["direction,bin_center_km,mean_h,n_users"]
    for direction, rows in stats.mean_time.items():
        for center, mean, n in rows:
            lines.append(f"{direction},{_num(center)},{_num(mean)},{n}")
    _write(out_dir / FIG2, lines)

    lines = ["direction,hours,cum_fraction"]
    for direction, rows in stats.cdf.items():
        for h, frac in rows:
            lines.append(f"{direction},{_num(h)},{_num(frac)}")
    _write(out_dir / FIG3, lines)

    lines = ["direction,group,band,fraction"]
    for direction, groups in stats.histograms.items():
        for label, bands in groups.items():
            for band, frac in bands:
                lines.append(f"{direction},{label},{band},{_num(frac)}")
    _write(out_dir / FIG4, lines)

    lines = ["direction,range,n,mean_depart_sod,mean_arrive_sod,mean_depart_clock,mean_arrive_clock"]
    for row in stats.schedule:
        lines.append(
            f"{row.direction},{row.range_label},{row.n},"
            f"{_num(row.mean_depart_sod)},{_num(row.mean_arrive_sod)},"
            f"{clock.format_clock(row.mean_depart_sod)},{clock.format_clock(row.mean_arrive_sod)}"
        )
    _write(out_dir / FIG5, lines)

    m = stats.marchetti
    lines = ["metric,value"]
    lines.append(f"threshold_km,{_num(m.threshold_km)}")
    lines.append(f"morning_constant_h,{'' if m.morning_constant_h is None else _num(m.morning_constant_h)}")
    lines.append(f"night_constant_h,{'' if m.night_constant_h is None else _num(m.night_constant_h)}")
    lines.append(f"daily_budget_h,{'' if m.daily_budget_h is None else _num(m.daily_budget_h)}")
    lines.append(f"n_over_threshold,{m.n_over_threshold}")
    lines.append(f"n_budget_users,{m.n_budget_users}")
    _write(out_dir / TABLE3, lines)


def stats_payload(stats: CohortStats | None):
    if stats is None:
        return None
    return {
        "n_users": stats.n_users,
        "group_counts": dict(stats.group_counts),
        "group_proportions": {k: float(v) for k, v in stats.group_proportions.items()},
        "mean_time": {
            d: [[c, m, n] for c, m, n in rows] for d, rows in stats.mean_time.items()
        },
        "cdf": {d: [[h, float(f)] for h, f in rows] for d, rows in stats.cdf.items()},
        "histograms": {
            d: {g: [[band, float(f)] for band, f in bands] for g, bands in groups.items()}
            for d, groups in stats.histograms.items()
        },
        "schedule": [
            {
                "direction": r.direction,
                "range": r.range_label,
                "n": r.n,
                "mean_depart_sod": r.mean_depart_sod,
                "mean_arrive_sod": r.mean_arrive_sod,
            }
            for r in stats.schedule
        ],
        "marchetti": {
            "threshold_km": stats.marchetti.threshold_km,
            "morning_constant_h": stats.marchetti.morning_constant_h,
            "night_constant_h": stats.marchetti.night_constant_h,
            "daily_budget_h": stats.marchetti.daily_budget_h,
            "n_over_threshold": stats.marchetti.n_over_threshold,
            "n_budget_users": stats.marchetti.n_budget_users,
        },
    }


def write_summary(
    path: Path,
    stats: CohortStats | None,
    config_echo: Mapping,
    funnel: Sequence[tuple[str, int]],
    row_rejections: Mapping[str, int],
    user_rejections: Mapping[str, int],
    n_conflicts: int,
) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": dict(config_echo),
        "funnel": {s: n for s, n in funnel},
        "row_rejections": dict(sorted(row_rejections.items())),
        "user_rejections": dict(sorted(user_rejections.items())),
        "n_conflicts": n_conflicts,
        "stats": stats_payload(stats),
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Difference:
    key: str
    a: object
    b: object
    delta: float | None
    tol: float
    ok: bool


@dataclass(frozen=True)
class ComparisonResult:
    differences: tuple[Difference, ...]
    n_compared: int

    @property
    def ok(self) -> bool:
        return all(d.ok for d in self.differences)

    def failures(self) -> list[Difference]:
        return [d for d in self.differences if not d.ok]


def _flatten(node, prefix: str, out: dict) -> None:
    if isinstance(node, dict):
        for k, v in node.items():
            _flatten(v, f"{prefix}.{k}" if prefix else str(k), out)
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _flatten(v, f"{prefix}.{i}", out)
    else:
        out[prefix] = node


def compare_bundles(
    dir_a: Path,
    dir_b: Path,
    tolerances: Mapping[str, float] | None = None,
    default_tol: float = 0.0,
) -> ComparisonResult:
    """Compare two summary.json files key by key.

    ``tolerances`` maps dotted-key prefixes to absolute tolerances; the
    longest matching prefix wins, else ``default_tol``.  Non-numeric leaves
    must match exactly.  Bundles with different schema versions cannot be
    compared.
    """
    a = json.loads((Path(dir_a) / SUMMARY).read_text(encoding="utf-8"))
    b = json.loads((Path(dir_b) / SUMMARY).read_text(encoding="utf-8"))
    if a.get("schema_version") != b.get("schema_version"):
        raise ValueError(
            f"schema version mismatch: {a.get('schema_version')} vs {b.get('schema_version')}"
        )
    tolerances = dict(tolerances or {})

    flat_a: dict = {}
    flat_b: dict = {}
    for src, out in ((a, flat_a), (b, flat_b)):
        _flatten({k: v for k, v in src.items() if k not in ("config",)}, "", out)

    def tol_for(key: str) -> float:
        best = default_tol
        best_len = -1
        for prefix, t in tolerances.items():
            if key.startswith(prefix) and len(prefix) > best_len:
                best, best_len = t, len(prefix)
        return best

    diffs = []
    for key in sorted(set(flat_a) | set(flat_b)):
        va = flat_a.get(key)
        vb = flat_b.get(key)
        tol = tol_for(key)
        if key not in flat_a or key not in flat_b:
            diffs.append(Difference(key, va, vb, None, tol, False))
            continue
        both_num = isinstance(va, (int, float)) and isinstance(vb, (int, float)) \
            and not isinstance(va, bool) and not isinstance(vb, bool)
        if both_num:
            delta = abs(float(va) - float(vb))
            ok = delta <= tol or (math.isnan(delta) and float(va) == float(vb))
            if delta > 0 or not ok:
                diffs.append(Difference(key, va, vb, delta, tol, ok))
        elif va != vb:
            diffs.append(Difference(key, va, vb, None, tol, False))
    return ComparisonResult(differences=tuple(diffs), n_compared=len(set(flat_a) | set(flat_b)))
