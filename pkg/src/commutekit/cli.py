"""Command-line entry points.

    commutekit analyze --config run.ini [--threads N] [--dump-observations]
    commutekit synth --config synth.ini --out DIR
    commutekit towers-stats --towers FILE --out DIR [--bands ...]
    commutekit compare DIR_A DIR_B [--tol X]

Exit codes: 0 success, 1 hard error, 2 empty result (no effective users).
On a hard error mid-run, files already written to the output directory by
this invocation are removed, so a bundle on disk is always complete.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

from . import geo, report
from .config import AnalyzeConfig, ConfigError, analyze_echo, load_analyze_config, \
    load_synth_config, synth_echo
from .engine import analyze_table, merge_tables
from .ingest import RecordTable, parse_towers
from .synth import generate_cohort

MANIFEST = "run_manifest.json"
SYNTH_MANIFEST = "synth_manifest.json"


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _json_out(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_analyze(cfg: AnalyzeConfig) -> int:
    t0 = time.perf_counter()
    written: list[Path] = []
    stage = "config"
    try:
        out = cfg.out
        out.mkdir(parents=True, exist_ok=True)

        stage = "ingest"
        digests = {str(p): _digest(p) for p in (cfg.towers, *cfg.records)}
        tower_set = parse_towers(cfg.towers)
        tables = [RecordTable.from_csv(p, tower_set) for p in cfg.records]
        table = merge_tables(tables, tower_set)

        stage = "analyze"
        result = analyze_table(table, cfg.params)

        stage = "report"
        user_rejections: dict[str, int] = {}
        for reason in result.rejections.values():
            user_rejections[reason] = user_rejections.get(reason, 0) + 1

        def emit(name: str, writer) -> None:
            path = out / name
            writer(path)
            written.append(path)

        emit(report.FUNNEL, lambda p: report.write_funnel(p, result.funnel))
        emit(report.REJECTIONS, lambda p: result.report.write(p))
        if result.stats is not None:
            report.write_stat_files(out, result.stats)
            written.extend(out / n for n in report.STAT_FILES if n != report.SUMMARY)
        emit(
            report.SUMMARY,
            lambda p: report.write_summary(
                p,
                result.stats,
                analyze_echo(cfg.params),
                result.funnel,
                dict(result.report.counts),
                user_rejections,
                result.n_conflicts,
            ),
        )
        if cfg.dump_observations:
            emit(report.OBSERVATIONS,
                 lambda p: report.write_observations(p, result.observations))

        wall = time.perf_counter() - t0
        rows_total = result.report.rows_total
        manifest = {
            "schema_version": report.SCHEMA_VERSION,
            "command": "analyze",
            "config": analyze_echo(cfg.params),
            "paths": {
                "towers": str(cfg.towers),
                "records": [str(r) for r in cfg.records],
                "out": str(out),
            },
            "run": {
                "threads": cfg.params.threads,
                "dump_observations": cfg.dump_observations,
            },
            "inputs": digests,
            "funnel": {s: n for s, n in result.funnel},
            "rows_total": rows_total,
            "rows_accepted": result.report.rows_accepted,
            "n_conflicts": result.n_conflicts,
            "wall_time_s": round(wall, 3),
            "records_per_second": int(rows_total / wall) if wall > 0 else None,
            "artifacts": sorted(p.name for p in written),
        }
        _json_out(out / MANIFEST, manifest)
    except Exception as exc:  # noqa: BLE001 - boundary: report and clean up
        for p in written:
            p.unlink(missing_ok=True)
        print(f"[{stage}] {exc}", file=sys.stderr)
        return 1

    if result.n_effective == 0:
        print("no effective users", file=sys.stderr)
        return 2
    return 0


def _cmd_analyze(args) -> int:
    try:
        cfg = load_analyze_config(args.config)
    except ConfigError as exc:
        print(f"[config] {exc}", file=sys.stderr)
        return 1
    if args.threads is not None:
        cfg = dataclasses.replace(
            cfg, params=dataclasses.replace(cfg.params, threads=args.threads)
        )
    if args.dump_observations:
        cfg = dataclasses.replace(cfg, dump_observations=True)
    return run_analyze(cfg)


def _cmd_synth(args) -> int:
    try:
        cfg = load_synth_config(args.config)
    except ConfigError as exc:
        print(f"[config] {exc}", file=sys.stderr)
        return 1
    try:
        bundle = generate_cohort(cfg)
    except ValueError as exc:
        print(f"[synth] {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "towers.csv").write_bytes(bundle.towers_csv)
    (out / "records.csv").write_bytes(bundle.records_csv)
    (out / "ground_truth.csv").write_text(bundle.truth.to_csv(), encoding="utf-8")
    manifest = {
        "schema_version": report.SCHEMA_VERSION,
        "command": "synth",
        "config": synth_echo(cfg),
        "n_towers": bundle.towers_csv.count(b"\n") - 1,
        "n_records": bundle.records_csv.count(b"\n") - 1,
        "n_agents": cfg.n_agents,
        "digests": {
            "towers.csv": "sha256:" + hashlib.sha256(bundle.towers_csv).hexdigest(),
            "records.csv": "sha256:" + hashlib.sha256(bundle.records_csv).hexdigest(),
        },
        "artifacts": ["ground_truth.csv", "records.csv", "towers.csv"],
    }
    _json_out(out / SYNTH_MANIFEST, manifest)
    return 0


def _cmd_towers_stats(args) -> int:
    try:
        tower_set = parse_towers(args.towers)
        edges = tuple(float(b) for b in args.bands.replace(",", " ").split())
        nn = geo.nearest_neighbor_stats(tower_set, edges)
    except ValueError as exc:
        print(f"[towers-stats] {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["cell_id,nn_km"]
    lines.extend(f"{cell},{nn.nn_km[cell]!r}" for cell in tower_set.cell_ids)
    (out / "tower_nn.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    lines = ["band_km,cum_fraction"]
    lines.extend(f"{edge!r},{frac!r}" for edge, frac in nn.band_cdf)
    (out / "tower_nn_cdf.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _cmd_compare(args) -> int:
    try:
        res = report.compare_bundles(Path(args.a), Path(args.b), default_tol=args.tol)
    except (OSError, ValueError) as exc:
        print(f"[compare] {exc}", file=sys.stderr)
        return 1
    for d in res.differences:
        mark = "ok " if d.ok else "FAIL"
        delta = "" if d.delta is None else f" |delta|={d.delta!r}"
        print(f"{mark} {d.key}: {d.a!r} vs {d.b!r}{delta} (tol {d.tol!r})")
    if res.ok:
        print(f"PASS ({res.n_compared} keys compared)")
        return 0
    print(f"FAIL ({len(res.failures())} of {res.n_compared} keys out of tolerance)")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="commutekit",
        description="Commute statistics from cell-tower traffic records.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--threads", type=int, default=None,
                   help="override the worker count from the config")
    p.add_argument("--dump-observations", action="store_true",
                   help="also write per-day commute observations")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic cohort with ground truth")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("towers-stats", help="tower nearest-neighbor distances and CDF")
    p.add_argument("--towers", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--bands", default="0.25,0.5,1,2,5,10,15,20",
                   help="band edges in km for the cumulative distribution")
    p.set_defaults(func=_cmd_towers_stats)

    p = sub.add_parser("compare", help="diff two report bundles by summary.json")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--tol", type=float, default=0.0,
                   help="absolute tolerance applied to every numeric key")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
