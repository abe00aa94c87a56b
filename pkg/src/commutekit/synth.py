"""Seeded synthetic cohort generator with planted ground truth.

Real traffic datasets from carriers are private, so verification runs on
generated cohorts instead: every agent gets a home tower, a work tower at a
distance drawn to realize a configured group mixture, and a daily schedule
with known true departure and arrival instants.  Records are emitted only
while the agent occupies an anchor; transit is silent by default, which is
the worst case for the last-record/first-record estimator and makes its
bias bound [0, 2 * emission_interval) exactly testable.

Determinism: the master seed spawns one child stream per agent, so output
bytes are identical for a fixed config regardless of how generation is
scheduled.
"""

from __future__ import annotations

import datetime as dt
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import clock, geo
from .commute import MORNING, NIGHT, CommuteObservation, UserCommuteSummary
from .stats import CohortStats, DistanceGroup, StatsConfig, compute_cohort_stats

KM_PER_DEG_LAT = math.pi * geo.EARTH_RADIUS_KM / 180.0

# Keep realized pair distances clear of group boundaries so that coordinate
# rounding in the CSV cannot flip a user's distance group.
BAND_MARGIN_KM = 0.05


class SynthError(ValueError):
    """Unsatisfiable synthetic-cohort configuration."""


@dataclass(frozen=True)
class TowerLayoutConfig:
    """A jittered grid of towers, optionally with far-away isolated sites.

    Isolated towers are placed beyond ``isolated_gap_km`` of the grid and of
    each other, so each one's nearest neighbor exceeds any sane isolation
    radius.
    """

    nx: int = 40
    ny: int = 40
    spacing_km: float = 1.2
    jitter_km: float = 0.25
    center_lat: float = 39.9
    center_lon: float = 116.4
    n_isolated: int = 0
    isolated_gap_km: float = 20.0

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1 or self.nx * self.ny < 2:
            raise ValueError("layout needs at least two grid towers")
        if self.spacing_km <= 0:
            raise ValueError("spacing_km must be positive")
        if self.jitter_km < 0 or self.jitter_km >= self.spacing_km / 2:
            raise ValueError("jitter_km must be in [0, spacing_km / 2)")
        if self.n_isolated < 0:
            raise ValueError("n_isolated must be >= 0")
        if self.isolated_gap_km <= 15.0:
            raise ValueError("isolated towers must sit beyond 15 km")


@dataclass(frozen=True)
class DurationModel:
    """How true one-way commute durations depend on distance.

    kinds:
      * ``linear_flat`` -- slope * d + per-direction intercept below the
        threshold; a per-direction constant plus truncated normal noise above.
      * ``group_bands`` -- per distance group, a weighted mixture of uniform
        duration bands (weights apportioned exactly, largest remainder).
      * ``fixed`` -- one constant per direction, independent of distance.
    """

    kind: str = "linear_flat"
    slope_h_per_km: float = 0.05
    intercept_morning_h: float = 0.12
    intercept_night_h: float = 0.15
    const_morning_h: float = 0.80
    const_night_h: float = 0.84
    sigma_h: float = 0.05
    threshold_km: float = 18.0
    fixed_morning_h: float = 0.5
    fixed_night_h: float = 0.5
    bands: dict[str, tuple[tuple[float, float, float], ...]] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear_flat", "group_bands", "fixed"):
            raise ValueError(f"unknown duration model kind {self.kind!r}")
        if self.kind == "group_bands":
            if not self.bands:
                raise ValueError("group_bands model needs per-group bands")
            for label, comps in self.bands.items():
                for w, lo, hi in comps:
                    if w < 0 or lo <= 0 or hi <= lo:
                        raise ValueError(f"bad duration band {label}: {(w, lo, hi)}")
        if self.sigma_h < 0:
            raise ValueError("sigma_h must be >= 0")


@dataclass(frozen=True)
class ScheduleModel:
    """Clock-time schedule generator settings (all values seconds of day)."""

    depart_morning_sod: int = clock.parse_clock("07:45")
    depart_morning_sigma_s: int = 720
    morning_lo_sod: int = clock.parse_clock("06:50")
    morning_hi_sod: int = clock.parse_clock("09:00")
    depart_night_sod: int = clock.parse_clock("18:10")
    depart_night_sigma_s: int = 720
    night_lo_sod: int = clock.parse_clock("17:30")
    night_hi_sod: int = clock.parse_clock("19:20")
    wake_sod: int = clock.parse_clock("04:15")
    wake_jitter_s: int = 300
    pre_span_s: int = 1500
    post_span_s: int = 1500
    latest_home_arrival_sod: int = clock.parse_clock("20:00")
    warmup_records: int = 4

    def __post_init__(self) -> None:
        if not 0 <= self.morning_lo_sod <= self.depart_morning_sod <= self.morning_hi_sod:
            raise ValueError("morning departure bounds must bracket the mean")
        if not self.morning_hi_sod <= self.night_lo_sod <= self.depart_night_sod <= self.night_hi_sod:
            raise ValueError("night departure bounds must bracket the mean and follow the morning")
        if self.wake_sod >= self.morning_lo_sod:
            raise ValueError("wake time must precede the earliest departure")
        if min(self.pre_span_s, self.post_span_s) < 0 or self.warmup_records < 1:
            raise ValueError("spans must be >= 0 and warmup_records >= 1")


def default_mixture() -> dict[str, float]:
    return {
        DistanceGroup.G0_2.label: 0.565,
        DistanceGroup.G2_6.label: 0.235,
        DistanceGroup.G6_15.label: 0.14,
        DistanceGroup.G15_25.label: 0.03,
        DistanceGroup.G25_PLUS.label: 0.03,
    }


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 1
    n_agents: int = 1000
    n_days: int = 5
    start_date: dt.date = dt.date(2012, 1, 2)  # a Monday
    weekday_only: bool = True
    emission_mode: str = "burst"
    emission_interval_s: int = 60
    n_isolated_agents: int = 0
    emit_transit_every_s: int | None = None
    layout: TowerLayoutConfig = field(default_factory=TowerLayoutConfig)
    mixture: dict[str, float] = field(default_factory=default_mixture)
    duration: DurationModel = field(default_factory=DurationModel)
    schedule: ScheduleModel = field(default_factory=ScheduleModel)
    commute_window_morning_end_sod: int = clock.parse_clock("10:00")
    commute_window_night_end_sod: int = clock.parse_clock("21:00")

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.n_days < 1:
            raise ValueError("n_days must be >= 1")
        if self.emission_mode not in ("burst", "continuous"):
            raise ValueError(f"unknown emission mode {self.emission_mode!r}")
        if self.emission_interval_s < 1:
            raise ValueError("emission_interval_s must be >= 1")
        if not 0 <= self.n_isolated_agents <= self.n_agents:
            raise ValueError("n_isolated_agents must lie in [0, n_agents]")
        if self.n_isolated_agents and self.layout.n_isolated == 0:
            raise ValueError("isolated agents need isolated towers in the layout")
        bad = set(self.mixture) - {g.label for g in DistanceGroup}
        if bad:
            raise ValueError(f"unknown mixture groups: {sorted(bad)}")
        if abs(sum(self.mixture.values()) - 1.0) > 1e-9:
            raise ValueError("group mixture must sum to 1")


@dataclass(frozen=True)
class DayTruth:
    """True occupancy transitions for one agent-day (absolute timestamps)."""

    day: int
    dep_morning: int
    arr_morning: int
    dep_night: int
    arr_night: int

    @property
    def morning_h(self) -> float:
        return (self.arr_morning - self.dep_morning) / 3600.0

    @property
    def night_h(self) -> float:
        return (self.arr_night - self.dep_night) / 3600.0


@dataclass(frozen=True)
class AgentTruth:
    agent_id: str
    home_cell: str
    work_cell: str
    distance_km: float
    expect_isolated: bool
    days: tuple[DayTruth, ...]


@dataclass(frozen=True)
class GroundTruth:
    agents: tuple[AgentTruth, ...]
    emission_interval_s: int

    def observation_index(self) -> dict[tuple[str, int, str], tuple[int, int]]:
        """(agent, day, direction) -> (true depart_ts, true arrive_ts)."""
        out = {}
        for agent in self.agents:
            for d in agent.days:
                out[(agent.agent_id, d.day, MORNING)] = (d.dep_morning, d.arr_morning)
                out[(agent.agent_id, d.day, NIGHT)] = (d.dep_night, d.arr_night)
        return out

    def to_csv(self) -> str:
        lines = [
            "agent_id,home_cell,work_cell,distance_km,expect_isolated,"
            "date,dep_morning,arr_morning,dep_night,arr_night"
        ]
        for a in self.agents:
            for d in a.days:
                lines.append(
                    f"{a.agent_id},{a.home_cell},{a.work_cell},{a.distance_km:.9f},"
                    f"{int(a.expect_isolated)},{clock.date_of_day(d.day).isoformat()},"
                    f"{clock.format_timestamp(d.dep_morning)},{clock.format_timestamp(d.arr_morning)},"
                    f"{clock.format_timestamp(d.dep_night)},{clock.format_timestamp(d.arr_night)}"
                )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CohortBundle:
    towers_csv: bytes
    records_csv: bytes
    truth: GroundTruth


def apportion(total: int, weights: Sequence[float]) -> list[int]:
    """Integer counts proportional to weights, summing exactly to total.

    Largest-remainder method; remainder ties break to the earlier index, so
    the result is deterministic.
    """
    if total < 0 or not weights or any(w < 0 for w in weights):
        raise ValueError("need non-negative total and weights")
    wsum = math.fsum(weights)
    if wsum <= 0:
        raise ValueError("weights must not all be zero")
    ideal = [total * w / wsum for w in weights]
    base = [int(math.floor(x)) for x in ideal]
    leftover = total - sum(base)
    order = sorted(range(len(weights)), key=lambda i: (base[i] - ideal[i], i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def analysis_days(cfg: SynthConfig) -> list[int]:
    """Epoch day numbers of the emission days, honoring the weekday flag."""
    days = []
    day = clock.day_number(cfg.start_date)
    while len(days) < cfg.n_days:
        if not cfg.weekday_only or clock.weekday_of_day(day) < 5:
            days.append(day)
        day += 1
    return days


def generate_towers(
    layout: TowerLayoutConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, int]:
    """Tower coordinates: grid towers first, isolated towers after.

    Returns (lat, lon, n_core) where the first n_core towers are the grid.
    """
    i, j = np.meshgrid(np.arange(layout.nx), np.arange(layout.ny), indexing="ij")
    x = (i.ravel() - (layout.nx - 1) / 2) * layout.spacing_km
    y = (j.ravel() - (layout.ny - 1) / 2) * layout.spacing_km
    n_core = layout.nx * layout.ny
    if layout.jitter_km > 0:
        x = x + rng.uniform(-layout.jitter_km, layout.jitter_km, n_core)
        y = y + rng.uniform(-layout.jitter_km, layout.jitter_km, n_core)

    if layout.n_isolated:
        # A column east of the grid, spaced far enough apart that isolated
        # towers do not rescue each other from isolation.
        gap = layout.isolated_gap_km
        iso_x = np.full(layout.n_isolated, x.max() + gap + layout.spacing_km)
        iso_y = y.min() + np.arange(layout.n_isolated) * (2 * gap + 5.0)
        x = np.concatenate([x, iso_x])
        y = np.concatenate([y, iso_y])

    km_per_deg_lon = KM_PER_DEG_LAT * math.cos(math.radians(layout.center_lat))
    lat = layout.center_lat + y / KM_PER_DEG_LAT
    lon = layout.center_lon + x / km_per_deg_lon
    return lat, lon, n_core


def towers_csv_bytes(lat: np.ndarray, lon: np.ndarray) -> bytes:
    out = io.StringIO()
    out.write("cell_id,lat,lon\n")
    for k in range(len(lat)):
        out.write(f"T{k:05d},{lat[k]:.7f},{lon[k]:.7f}\n")
    return out.getvalue().encode()


def _truncated_normal(rng: np.random.Generator, sigma: float, width: float = 3.0) -> float:
    """A normal draw clipped to +-width sigma; symmetric, so mean stays 0."""
    if sigma == 0:
        return 0.0
    return float(np.clip(rng.normal(0.0, sigma), -width * sigma, width * sigma))


class _DurationSampler:
    """Resolves per-agent true durations according to the model."""

    def __init__(self, model: DurationModel, group_counts: dict[str, int]):
        self.model = model
        self._component_plan: dict[str, list[int]] = {}
        self._component_used: dict[str, int] = {}
        if model.kind == "group_bands":
            for label, count in group_counts.items():
                if count == 0:
                    continue
                comps = model.bands.get(label)
                if comps is None:
                    raise SynthError(f"group_bands model missing bands for {label}")
                counts = apportion(count, [w for w, _, _ in comps])
                plan: list[int] = []
                for ci, c in enumerate(counts):
                    plan.extend([ci] * c)
                self._component_plan[label] = plan
                self._component_used[label] = 0

    def durations_h(
        self, group_label: str, distance_km: float, rng: np.random.Generator
    ) -> tuple[float, float]:
        m = self.model
        if m.kind == "fixed":
            return m.fixed_morning_h, m.fixed_night_h
        if m.kind == "linear_flat":
            if distance_km < m.threshold_km:
                return (
                    m.slope_h_per_km * distance_km + m.intercept_morning_h,
                    m.slope_h_per_km * distance_km + m.intercept_night_h,
                )
            return (
                m.const_morning_h + _truncated_normal(rng, m.sigma_h),
                m.const_night_h + _truncated_normal(rng, m.sigma_h),
            )
        # group_bands: exact component counts per group, uniform within band
        plan = self._component_plan[group_label]
        used = self._component_used[group_label]
        self._component_used[group_label] = used + 1
        _, lo, hi = self.model.bands[group_label][plan[used]]
        return float(rng.uniform(lo, hi)), float(rng.uniform(lo, hi))


def _pick_anchor_pair(
    rng: np.random.Generator,
    dist_row_of: np.ndarray,  # full pairwise matrix, core x all
    n_core: int,
    group: DistanceGroup,
) -> tuple[int, int, float]:
    # Zero-distance (home == work) anchors are legal downstream but yield no
    # commute observations, so the generator always plants distinct towers.
    lo = group.lo + (BAND_MARGIN_KM if group.lo > 0 else 0.0)
    hi = group.hi - (BAND_MARGIN_KM if math.isfinite(group.hi) else 0.0)
    for _ in range(200):
        home = int(rng.integers(n_core))
        row = dist_row_of[home, :n_core]
        cands = np.flatnonzero((row >= lo) & (row < hi) & (row > 0))
        if len(cands):
            work = int(cands[rng.integers(len(cands))])
            return home, work, float(row[work])
    raise SynthError(f"no tower pair realizes distance group {group.label}")


def _burst_times(end_ts: int, phase: int, span_s: int, interval_s: int, floor_ts: int) -> np.ndarray:
    """Record times end_ts - phase - k*interval for k = 0.., newest first,
    not older than floor_ts."""
    n = span_s // interval_s + 1
    t = end_ts - phase - np.arange(n, dtype=np.int64) * interval_s
    return t[t >= floor_ts]


def _forward_times(start_ts: int, phase: int, span_s: int, interval_s: int, ceil_ts: int) -> np.ndarray:
    n = span_s // interval_s + 1
    t = start_ts + phase + np.arange(n, dtype=np.int64) * interval_s
    return t[t < ceil_ts]


def _grid_times(lo_ts: int, hi_ts: int, interval_s: int, day_start: int) -> np.ndarray:
    """Continuous-mode grid aligned to the day start, inclusive of hi_ts."""
    first = day_start + ((lo_ts - day_start + interval_s - 1) // interval_s) * interval_s
    if first > hi_ts:
        return np.array([], dtype=np.int64)
    return np.arange(first, hi_ts + 1, interval_s, dtype=np.int64)


def generate_cohort(cfg: SynthConfig) -> CohortBundle:
    """Emit the tower file, record file, and ground truth for one cohort."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_agents + 1)
    layout_rng = np.random.default_rng(seeds[0])
    lat, lon, n_core = generate_towers(cfg.layout, layout_rng)
    pair_km = geo.pairwise_km(lat, lon)

    n_regular = cfg.n_agents - cfg.n_isolated_agents
    group_order = list(DistanceGroup)
    weights = [cfg.mixture.get(g.label, 0.0) for g in group_order]
    counts = apportion(n_regular, weights)
    group_counts = {g.label: c for g, c in zip(group_order, counts)}
    agent_groups: list[DistanceGroup] = []
    for g, c in zip(group_order, counts):
        agent_groups.extend([g] * c)

    sampler = _DurationSampler(cfg.duration, group_counts)
    days = analysis_days(cfg)
    day_set = set(days)
    warmups = sorted({d - 1 for d in days if d - 1 not in day_set})

    E = cfg.emission_interval_s
    sched = cfg.schedule
    w_m_end = cfg.commute_window_morning_end_sod
    w_n_end = cfg.commute_window_night_end_sod

    agent_ts: list[np.ndarray] = []
    agent_cells: list[np.ndarray] = []
    agent_counts: list[int] = []
    truths: list[AgentTruth] = []

    for idx in range(cfg.n_agents):
        rng = np.random.default_rng(seeds[idx + 1])
        isolated = idx >= n_regular
        if isolated:
            home = n_core + (idx - n_regular) % cfg.layout.n_isolated
            work = int(rng.integers(n_core))
            distance = float(pair_km[home, work])
            dur_m_h, dur_n_h = 0.5, 0.5
        else:
            group = agent_groups[idx]
            home, work, distance = _pick_anchor_pair(rng, pair_km, n_core, group)
            dur_m_h, dur_n_h = sampler.durations_h(group.label, distance, rng)
        dur_m = int(round(dur_m_h * 3600))
        dur_n = int(round(dur_n_h * 3600))
        if dur_m < 60 or dur_n < 60:
            raise SynthError("true durations below one minute are not supported")

        hi_m = min(sched.morning_hi_sod, w_m_end - dur_m - 2 * E - 60)
        hi_n = min(
            sched.night_hi_sod,
            sched.latest_home_arrival_sod - dur_n,
            w_n_end - dur_n - 2 * E - 60,
        )
        if hi_m < sched.morning_lo_sod or hi_n < sched.night_lo_sod:
            raise SynthError(
                f"duration {max(dur_m, dur_n) / 3600:.2f} h cannot fit the commute windows"
            )

        dep_m_sod = np.clip(
            np.rint(rng.normal(sched.depart_morning_sod, sched.depart_morning_sigma_s, cfg.n_days)),
            sched.morning_lo_sod,
            hi_m,
        ).astype(np.int64)
        dep_n_sod = np.clip(
            np.rint(rng.normal(sched.depart_night_sod, sched.depart_night_sigma_s, cfg.n_days)),
            sched.night_lo_sod,
            hi_n,
        ).astype(np.int64)
        phases = rng.integers(0, E, size=(cfg.n_days, 4))
        wake_jit = rng.integers(0, sched.wake_jitter_s + 1, size=cfg.n_days)
        warm_phase = rng.integers(0, E, size=len(warmups))

        ts_parts: list[np.ndarray] = []
        cell_parts: list[np.ndarray] = []

        def emit(times: np.ndarray, cell: int) -> None:
            if len(times):
                ts_parts.append(times)
                cell_parts.append(np.full(len(times), cell, dtype=np.int32))

        for wi, wday in enumerate(warmups):
            base = wday * clock.SECONDS_PER_DAY
            start = base + clock.parse_clock("19:00") + int(warm_phase[wi])
            if cfg.emission_mode == "continuous":
                emit(_grid_times(base + clock.parse_clock("19:00"), base + clock.SECONDS_PER_DAY - 1, E, base), home)
            else:
                emit(start + np.arange(sched.warmup_records, dtype=np.int64) * E, home)

        day_truths: list[DayTruth] = []
        for di, day in enumerate(days):
            base = day * clock.SECONDS_PER_DAY
            dep_m_ts = base + int(dep_m_sod[di])
            arr_m_ts = dep_m_ts + dur_m
            dep_n_ts = base + int(dep_n_sod[di])
            arr_n_ts = dep_n_ts + dur_n
            p1, p2, p3, p4 = (int(p) for p in phases[di])

            if cfg.emission_mode == "continuous":
                emit(_grid_times(base, dep_m_ts, E, base), home)
                emit(_grid_times(arr_m_ts, dep_n_ts, E, base), work)
                emit(_grid_times(arr_n_ts, base + clock.SECONDS_PER_DAY - 1, E, base), home)
            else:
                wake_ts = base + sched.wake_sod + int(wake_jit[di])
                emit(np.array([wake_ts], dtype=np.int64), home)
                emit(_burst_times(dep_m_ts, p1, sched.pre_span_s, E, wake_ts + 1), home)
                emit(_forward_times(arr_m_ts, p2, sched.post_span_s, E, dep_n_ts), work)
                emit(_burst_times(dep_n_ts, p3, sched.pre_span_s, E, arr_m_ts + p2 + 1), work)
                emit(
                    _forward_times(arr_n_ts, p4, sched.post_span_s, E, base + clock.SECONDS_PER_DAY),
                    home,
                )

            if cfg.emit_transit_every_s:
                road = _road_tower(pair_km, lat, lon, home, work)
                if road is not None:
                    step = cfg.emit_transit_every_s
                    for lo, hi in ((dep_m_ts, arr_m_ts), (dep_n_ts, arr_n_ts)):
                        t = np.arange(lo + step, hi, step, dtype=np.int64)
                        emit(t, road)

            day_truths.append(DayTruth(day, dep_m_ts, arr_m_ts, dep_n_ts, arr_n_ts))

        ts = np.concatenate(ts_parts)
        cells = np.concatenate(cell_parts)
        order = np.argsort(ts, kind="stable")
        agent_ts.append(ts[order])
        agent_cells.append(cells[order])
        agent_counts.append(len(ts))
        truths.append(
            AgentTruth(
                agent_id=f"u{idx:05d}",
                home_cell=f"T{home:05d}",
                work_cell=f"T{work:05d}",
                distance_km=distance,
                expect_isolated=isolated,
                days=tuple(day_truths),
            )
        )

    records_csv = _render_records(agent_ts, agent_cells, agent_counts)
    return CohortBundle(
        towers_csv=towers_csv_bytes(lat, lon),
        records_csv=records_csv,
        truth=GroundTruth(agents=tuple(truths), emission_interval_s=E),
    )


def _road_tower(
    pair_km: np.ndarray, lat: np.ndarray, lon: np.ndarray, home: int, work: int
) -> int | None:
    """Tower nearest the home-work midpoint, excluding the anchors."""
    mid_lat = (lat[home] + lat[work]) / 2
    mid_lon = (lon[home] + lon[work]) / 2
    d = geo.haversine_km(mid_lat, mid_lon, lat, lon)
    d[home] = np.inf
    d[work] = np.inf
    k = int(np.argmin(d))
    return None if math.isinf(d[k]) else k


def _render_records(
    agent_ts: list[np.ndarray], agent_cells: list[np.ndarray], agent_counts: list[int]
) -> bytes:
    """Assemble the record CSV: fixed-width rows, ordered by agent then time."""
    ts = np.concatenate(agent_ts) if agent_ts else np.array([], dtype=np.int64)
    cells = np.concatenate(agent_cells) if agent_cells else np.array([], dtype=np.int32)
    agent_idx = np.repeat(np.arange(len(agent_counts), dtype=np.int64), agent_counts)
    n = len(ts)

    header = b"user_id,cell_id,start_time,end_time\n"
    if n == 0:
        return header

    user_b = np.char.mod("u%05d", agent_idx).astype("S6")
    cell_b = np.char.mod("T%05d", cells).astype("S6")
    ts_b = np.datetime_as_string(ts.astype("datetime64[s]"), unit="s").astype("S19")

    buf = np.empty((n, 35), dtype=np.uint8)
    buf[:, 0:6] = user_b.view(np.uint8).reshape(n, 6)
    buf[:, 6] = 0x2C
    buf[:, 7:13] = cell_b.view(np.uint8).reshape(n, 6)
    buf[:, 13] = 0x2C
    buf[:, 14:33] = ts_b.view(np.uint8).reshape(n, 19)
    buf[:, 33] = 0x2C
    buf[:, 34] = 0x0A
    return header + buf.tobytes()


def true_metrics(truth: GroundTruth, stats_cfg: StatsConfig | None = None) -> CohortStats:
    """Every cohort statistic computed from planted values directly.

    Uses the same aggregation code as the pipeline, so any difference
    between this and a pipeline run is attributable to reconstruction,
    not to binning conventions.
    """
    stats_cfg = stats_cfg or StatsConfig()
    summaries: list[UserCommuteSummary] = []
    observations: list[CommuteObservation] = []
    for agent in truth.agents:
        if agent.expect_isolated:
            continue
        morning = [d.morning_h for d in agent.days]
        night = [d.night_h for d in agent.days]
        summaries.append(
            UserCommuteSummary(
                user_id=agent.agent_id,
                distance_km=agent.distance_km,
                mean_morning_h=math.fsum(morning) / len(morning),
                mean_night_h=math.fsum(night) / len(night),
                n_morning=len(morning),
                n_night=len(night),
            )
        )
        for d in agent.days:
            observations.append(
                CommuteObservation(
                    agent.agent_id, d.day, MORNING, d.dep_morning, d.arr_morning, agent.distance_km
                )
            )
            observations.append(
                CommuteObservation(
                    agent.agent_id, d.day, NIGHT, d.dep_night, d.arr_night, agent.distance_km
                )
            )
    return compute_cohort_stats(summaries, observations, stats_cfg)
