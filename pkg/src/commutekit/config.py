"""Plain-text run configuration (INI sections, configparser syntax).

Every key is optional; omitted keys fall back to the library defaults, so
an empty file is a valid config.  Relative paths are resolved against the
directory containing the config file, which keeps a committed config +
data directory relocatable.
"""

from __future__ import annotations

import configparser
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

from . import synth as synthmod
from .anchors import AnchorWindows, FilterConfig
from .commute import CommuteWindows
from .engine import PipelineParams
from .stats import DistanceGroup, StatsConfig
from .trajectory import TimeWindow

WEEKDAY_KEYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnalyzeConfig:
    towers: Path
    records: tuple[Path, ...]
    out: Path
    params: PipelineParams
    dump_observations: bool


def _window(text: str, where: str) -> TimeWindow:
    parts = text.split("-")
    if len(parts) != 2:
        raise ConfigError(f"{where}: expected 'HH:MM-HH:MM', got {text!r}")
    try:
        return TimeWindow.from_clock(parts[0].strip(), parts[1].strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _floats(text: str, where: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{where}: expected numbers, got {text!r}") from exc


def _grid(text: str, where: str) -> tuple[float, ...]:
    """Either an explicit list or 'start:stop:step' (stop inclusive)."""
    if ":" in text:
        try:
            start, stop, step = (float(p) for p in text.split(":"))
        except ValueError as exc:
            raise ConfigError(f"{where}: expected start:stop:step, got {text!r}") from exc
        if step <= 0 or stop < start:
            raise ConfigError(f"{where}: bad grid bounds {text!r}")
        n = int(round((stop - start) / step))
        grid = tuple(start + k * step for k in range(n + 1))
        return tuple(g for g in grid if g <= stop + 1e-12)
    return _floats(text, where)


def _weekdays(text: str, where: str) -> frozenset[int]:
    text = text.strip().lower()
    if text == "all":
        return frozenset(range(7))
    days = set()
    for token in text.replace(",", " ").split():
        if token not in WEEKDAY_KEYS:
            raise ConfigError(f"{where}: unknown weekday {token!r}")
        days.add(WEEKDAY_KEYS.index(token))
    if not days:
        raise ConfigError(f"{where}: empty weekday set")
    return frozenset(days)


def _read_ini(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc
    return parser


def _get(parser, section, key, default, cast, where_cast=None):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    where = f"[{section}] {key}"
    if cast is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    try:
        return cast(raw) if where_cast is None else cast(raw, where)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_analyze_config(path: Path) -> AnalyzeConfig:
    path = Path(path)
    parser = _read_ini(path)
    base = path.parent

    towers = _get(parser, "paths", "towers", None, str)
    records_raw = _get(parser, "paths", "records", None, str)
    out = _get(parser, "paths", "out", None, str)
    if not towers or not records_raw or not out:
        raise ConfigError("[paths] must provide towers, records and out")
    records = tuple(base / p for p in records_raw.replace(",", " ").split())

    try:
        filters = FilterConfig(
            min_daily_records=_get(parser, "filters", "min_daily_records",
                                   FilterConfig.min_daily_records, int),
            isolation_radius_km=_get(parser, "filters", "isolation_radius_km",
                                     FilterConfig.isolation_radius_km, float),
            include_days=_get(parser, "filters", "weekdays",
                              FilterConfig.include_days, _weekdays, True),
        )
        anchor_windows = AnchorWindows(
            home_window=_get(parser, "anchor_windows", "home",
                             AnchorWindows().home_window, _window, True),
            work_window=_get(parser, "anchor_windows", "work",
                             AnchorWindows().work_window, _window, True),
            dominance_fraction=_get(parser, "anchor_windows", "dominance_fraction",
                                    AnchorWindows.dominance_fraction, float),
        )
        commute_windows = CommuteWindows(
            morning=_get(parser, "commute_windows", "morning",
                         CommuteWindows().morning, _window, True),
            night=_get(parser, "commute_windows", "night",
                       CommuteWindows().night, _window, True),
        )
        stats_defaults = StatsConfig()
        stats = StatsConfig(
            bin_km=_get(parser, "stats", "bin_km", stats_defaults.bin_km, float),
            hist_edges_h=_get(parser, "stats", "hist_edges_h",
                              stats_defaults.hist_edges_h, _floats, True),
            cdf_grid_h=_get(parser, "stats", "cdf_grid_h",
                            stats_defaults.cdf_grid_h, _grid, True),
            schedule_edges_h=_get(parser, "stats", "schedule_edges_h",
                                  stats_defaults.schedule_edges_h, _floats, True),
            threshold_km=_get(parser, "stats", "threshold_km",
                              stats_defaults.threshold_km, float),
        )
        params = PipelineParams(
            filters=filters,
            anchor_windows=anchor_windows,
            commute_windows=commute_windows,
            stats=stats,
            threads=_get(parser, "run", "threads", 1, int),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return AnalyzeConfig(
        towers=base / towers,
        records=records,
        out=base / out,
        params=params,
        dump_observations=_get(parser, "run", "dump_observations", False, bool),
    )


def analyze_echo(params: PipelineParams) -> dict:
    """Echo of the semantic analysis parameters only.

    Paths, worker counts and other run mechanics are deliberately absent:
    two runs with the same parameters on the same data must produce the
    same summary file regardless of where or how they executed.
    """
    p = params
    return {
        "filters": {
            "min_daily_records": p.filters.min_daily_records,
            "isolation_radius_km": p.filters.isolation_radius_km,
            "weekdays": ",".join(WEEKDAY_KEYS[d] for d in sorted(p.filters.include_days)),
        },
        "anchor_windows": {
            "home": str(p.anchor_windows.home_window),
            "work": str(p.anchor_windows.work_window),
            "dominance_fraction": p.anchor_windows.dominance_fraction,
        },
        "commute_windows": {
            "morning": str(p.commute_windows.morning),
            "night": str(p.commute_windows.night),
        },
        "stats": {
            "bin_km": p.stats.bin_km,
            "hist_edges_h": list(p.stats.hist_edges_h),
            "cdf_grid_h": list(p.stats.cdf_grid_h),
            "schedule_edges_h": list(p.stats.schedule_edges_h),
            "threshold_km": p.stats.threshold_km,
        },
    }


def _clock_sod(text: str, where: str) -> int:
    from .clock import parse_clock

    try:
        return parse_clock(text)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


# INI keys cannot contain '=', so distance groups are addressed by enum
# name (g0_2 ... g25_plus) in the mixture and duration.bands sections.
_GROUP_BY_NAME = {g.name.lower(): g.label for g in DistanceGroup}


def _group_label(key: str, section: str) -> str:
    label = _GROUP_BY_NAME.get(key.strip().lower())
    if label is None:
        raise ConfigError(
            f"[{section}] unknown group {key!r}; use one of {sorted(_GROUP_BY_NAME)}"
        )
    return label


def _duration_bands(parser) -> dict[str, tuple[tuple[float, float, float], ...]] | None:
    if not parser.has_section("duration.bands"):
        return None
    bands: dict[str, tuple[tuple[float, float, float], ...]] = {}
    for key, raw in parser.items("duration.bands"):
        comps = []
        for chunk in raw.split(","):
            parts = chunk.strip().split(":")
            if len(parts) != 3:
                raise ConfigError(
                    f"[duration.bands] {key}: expected weight:lo:hi, got {chunk.strip()!r}"
                )
            try:
                w, lo, hi = (float(p) for p in parts)
            except ValueError as exc:
                raise ConfigError(f"[duration.bands] {key}: {exc}") from exc
            comps.append((w, lo, hi))
        bands[_group_label(key, "duration.bands")] = tuple(comps)
    return bands


def load_synth_config(path: Path) -> synthmod.SynthConfig:
    path = Path(path)
    parser = _read_ini(path)
    sd = synthmod.SynthConfig()

    layout_defaults = synthmod.TowerLayoutConfig()
    try:
        layout = synthmod.TowerLayoutConfig(
            nx=_get(parser, "layout", "nx", layout_defaults.nx, int),
            ny=_get(parser, "layout", "ny", layout_defaults.ny, int),
            spacing_km=_get(parser, "layout", "spacing_km", layout_defaults.spacing_km, float),
            jitter_km=_get(parser, "layout", "jitter_km", layout_defaults.jitter_km, float),
            center_lat=_get(parser, "layout", "center_lat", layout_defaults.center_lat, float),
            center_lon=_get(parser, "layout", "center_lon", layout_defaults.center_lon, float),
            n_isolated=_get(parser, "layout", "n_isolated", layout_defaults.n_isolated, int),
            isolated_gap_km=_get(parser, "layout", "isolated_gap_km",
                                 layout_defaults.isolated_gap_km, float),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    mixture = dict(sd.mixture)
    if parser.has_section("mixture"):
        mixture = {}
        for key, raw in parser.items("mixture"):
            try:
                mixture[_group_label(key, "mixture")] = float(raw)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"[mixture] {key}: {exc}") from exc

    dd = synthmod.DurationModel()
    try:
        duration = synthmod.DurationModel(
            kind=_get(parser, "duration", "kind", dd.kind, str),
            slope_h_per_km=_get(parser, "duration", "slope_h_per_km",
                                dd.slope_h_per_km, float),
            intercept_morning_h=_get(parser, "duration", "intercept_morning_h",
                                     dd.intercept_morning_h, float),
            intercept_night_h=_get(parser, "duration", "intercept_night_h",
                                   dd.intercept_night_h, float),
            const_morning_h=_get(parser, "duration", "const_morning_h",
                                 dd.const_morning_h, float),
            const_night_h=_get(parser, "duration", "const_night_h", dd.const_night_h, float),
            sigma_h=_get(parser, "duration", "sigma_h", dd.sigma_h, float),
            threshold_km=_get(parser, "duration", "threshold_km", dd.threshold_km, float),
            fixed_morning_h=_get(parser, "duration", "fixed_morning_h",
                                 dd.fixed_morning_h, float),
            fixed_night_h=_get(parser, "duration", "fixed_night_h", dd.fixed_night_h, float),
            bands=_duration_bands(parser),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sched_d = synthmod.ScheduleModel()
    try:
        schedule = synthmod.ScheduleModel(
            depart_morning_sod=_get(parser, "schedule", "depart_morning",
                                    sched_d.depart_morning_sod, _clock_sod, True),
            depart_morning_sigma_s=_get(parser, "schedule", "sigma_morning_s",
                                        sched_d.depart_morning_sigma_s, int),
            morning_lo_sod=_get(parser, "schedule", "morning_lo",
                                sched_d.morning_lo_sod, _clock_sod, True),
            morning_hi_sod=_get(parser, "schedule", "morning_hi",
                                sched_d.morning_hi_sod, _clock_sod, True),
            depart_night_sod=_get(parser, "schedule", "depart_night",
                                  sched_d.depart_night_sod, _clock_sod, True),
            depart_night_sigma_s=_get(parser, "schedule", "sigma_night_s",
                                      sched_d.depart_night_sigma_s, int),
            night_lo_sod=_get(parser, "schedule", "night_lo",
                              sched_d.night_lo_sod, _clock_sod, True),
            night_hi_sod=_get(parser, "schedule", "night_hi",
                              sched_d.night_hi_sod, _clock_sod, True),
            wake_sod=_get(parser, "schedule", "wake", sched_d.wake_sod, _clock_sod, True),
            wake_jitter_s=_get(parser, "schedule", "wake_jitter_s", sched_d.wake_jitter_s, int),
            pre_span_s=_get(parser, "schedule", "pre_span_s", sched_d.pre_span_s, int),
            post_span_s=_get(parser, "schedule", "post_span_s", sched_d.post_span_s, int),
            latest_home_arrival_sod=_get(parser, "schedule", "latest_home_arrival",
                                         sched_d.latest_home_arrival_sod, _clock_sod, True),
            warmup_records=_get(parser, "schedule", "warmup_records",
                                sched_d.warmup_records, int),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    transit = _get(parser, "synth", "transit_every_s", 0, int)
    try:
        return synthmod.SynthConfig(
            seed=_get(parser, "synth", "seed", sd.seed, int),
            n_agents=_get(parser, "synth", "n_agents", sd.n_agents, int),
            n_days=_get(parser, "synth", "n_days", sd.n_days, int),
            start_date=_get(parser, "synth", "start_date", sd.start_date, dt.date.fromisoformat),
            weekday_only=_get(parser, "synth", "weekday_only", sd.weekday_only, bool),
            emission_mode=_get(parser, "synth", "emission_mode", sd.emission_mode, str),
            emission_interval_s=_get(parser, "synth", "emission_interval_s",
                                     sd.emission_interval_s, int),
            n_isolated_agents=_get(parser, "synth", "n_isolated_agents",
                                   sd.n_isolated_agents, int),
            emit_transit_every_s=transit or None,
            layout=layout,
            mixture=mixture,
            duration=duration,
            schedule=schedule,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def synth_echo(cfg: synthmod.SynthConfig) -> dict:
    return {
        "synth": {
            "seed": cfg.seed,
            "n_agents": cfg.n_agents,
            "n_days": cfg.n_days,
            "start_date": cfg.start_date.isoformat(),
            "weekday_only": cfg.weekday_only,
            "emission_mode": cfg.emission_mode,
            "emission_interval_s": cfg.emission_interval_s,
            "n_isolated_agents": cfg.n_isolated_agents,
            "transit_every_s": cfg.emit_transit_every_s or 0,
        },
        "layout": {
            "nx": cfg.layout.nx,
            "ny": cfg.layout.ny,
            "spacing_km": cfg.layout.spacing_km,
            "jitter_km": cfg.layout.jitter_km,
            "center_lat": cfg.layout.center_lat,
            "center_lon": cfg.layout.center_lon,
            "n_isolated": cfg.layout.n_isolated,
            "isolated_gap_km": cfg.layout.isolated_gap_km,
        },
        "mixture": dict(cfg.mixture),
        "duration": {
            "kind": cfg.duration.kind,
            "slope_h_per_km": cfg.duration.slope_h_per_km,
            "intercept_morning_h": cfg.duration.intercept_morning_h,
            "intercept_night_h": cfg.duration.intercept_night_h,
            "const_morning_h": cfg.duration.const_morning_h,
            "const_night_h": cfg.duration.const_night_h,
            "sigma_h": cfg.duration.sigma_h,
            "threshold_km": cfg.duration.threshold_km,
            "fixed_morning_h": cfg.duration.fixed_morning_h,
            "fixed_night_h": cfg.duration.fixed_night_h,
            "bands": {k: [list(c) for c in v] for k, v in (cfg.duration.bands or {}).items()},
        },
        "schedule": {
            "depart_morning": cfg.schedule.depart_morning_sod,
            "sigma_morning_s": cfg.schedule.depart_morning_sigma_s,
            "morning_lo": cfg.schedule.morning_lo_sod,
            "morning_hi": cfg.schedule.morning_hi_sod,
            "depart_night": cfg.schedule.depart_night_sod,
            "sigma_night_s": cfg.schedule.depart_night_sigma_s,
            "night_lo": cfg.schedule.night_lo_sod,
            "night_hi": cfg.schedule.night_hi_sod,
            "wake": cfg.schedule.wake_sod,
            "wake_jitter_s": cfg.schedule.wake_jitter_s,
            "pre_span_s": cfg.schedule.pre_span_s,
            "post_span_s": cfg.schedule.post_span_s,
            "latest_home_arrival": cfg.schedule.latest_home_arrival_sod,
            "warmup_records": cfg.schedule.warmup_records,
        },
    }
