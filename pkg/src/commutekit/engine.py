"""Vectorized end-to-end analysis over a columnar record table.

This is the throughput path: one lexsort puts records in (user, time)
order, after which every per-user step (daily counts, dwell, anchor votes,
commute extraction) is a grouped reduction over composite integer keys.
Semantics are defined by the row-level modules (trajectory, anchors,
commute); this module must agree with them record for record, which the
test suite checks by running both paths on the same cohorts.

Work is sharded by contiguous user ranges.  No computation crosses a user
boundary and shards merge in index order, so results are byte-identical
for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import geo
from .anchors import (
    REASON_ISOLATED,
    REASON_NO_HOME,
    REASON_NO_WORK,
    AnchorSet,
    AnchorWindows,
    FilterConfig,
)
from .clock import SECONDS_PER_DAY
from .commute import (
    MORNING,
    NIGHT,
    CommuteObservation,
    CommuteWindows,
    UserCommuteSummary,
)
from .ingest import RecordTable, RejectionReport, TowerSet, parse_towers
from .stats import CohortStats, StatsConfig, compute_cohort_stats

REASON_NO_ACTIVE_DAYS = "no qualifying days"
REASON_NO_OBSERVATIONS = "no commute observations"

FUNNEL_STAGES = (
    "total",
    "active",
    "home_anchored",
    "work_anchored",
    "non_isolated",
    "effective",
)

# Per-user outcome codes, in funnel order.
_OK = 0
_R_NO_ACTIVE = 1
_R_NO_HOME = 2
_R_NO_WORK = 3
_R_ISOLATED = 4
_R_NO_OBS = 5

_REASON_LABEL = {
    _R_NO_ACTIVE: REASON_NO_ACTIVE_DAYS,
    _R_NO_HOME: REASON_NO_HOME,
    _R_NO_WORK: REASON_NO_WORK,
    _R_ISOLATED: REASON_ISOLATED,
    _R_NO_OBS: REASON_NO_OBSERVATIONS,
}


@dataclass(frozen=True)
class PipelineParams:
    filters: FilterConfig = field(default_factory=FilterConfig)
    anchor_windows: AnchorWindows = field(default_factory=AnchorWindows)
    commute_windows: CommuteWindows = field(default_factory=CommuteWindows)
    stats: StatsConfig = field(default_factory=StatsConfig)
    threads: int = 1

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class PipelineResult:
    tower_set: TowerSet
    report: RejectionReport
    funnel: tuple[tuple[str, int], ...]
    rejections: Mapping[str, str]
    anchors: Mapping[str, AnchorSet]
    observations: tuple[CommuteObservation, ...]
    summaries: tuple[UserCommuteSummary, ...]
    stats: CohortStats | None
    n_conflicts: int

    @property
    def n_effective(self) -> int:
        return self.funnel[-1][1]


@dataclass
class _Shard:
    """Per-user outcome arrays for one contiguous user range."""

    u_lo: int
    reason: np.ndarray  # int8 per user
    home_of: np.ndarray  # cell index or -1
    work_of: np.ndarray
    distance: np.ndarray  # km, valid where both anchors set
    q_run_user: np.ndarray  # qualifying runs, for anchor day listings
    q_run_day: np.ndarray
    obs_user: np.ndarray
    obs_day: np.ndarray
    obs_dir: np.ndarray  # 0 morning, 1 night
    obs_dep: np.ndarray
    obs_arr: np.ndarray


def merge_tables(tables: Sequence[RecordTable], tower_set: TowerSet) -> RecordTable:
    """Concatenate record shards in listed order under one user pool."""
    if not tables:
        raise ValueError("need at least one record table")
    if len(tables) == 1:
        return tables[0]
    pool = np.array(sorted(set().union(*(map(str, t.user_ids) for t in tables))), dtype=object)
    idx_parts = []
    for t in tables:
        remap = np.searchsorted(pool, t.user_ids).astype(np.int32)
        idx_parts.append(remap[t.user_idx] if len(t.user_idx) else t.user_idx)
    report = RejectionReport()
    for t in tables:
        report.merge(t.report)
    return RecordTable(
        user_ids=pool,
        user_idx=np.concatenate(idx_parts),
        cell_idx=np.concatenate([t.cell_idx for t in tables]),
        t=np.concatenate([t.t for t in tables]),
        tower_set=tower_set,
        report=report,
    )


def analyze_table(table: RecordTable, params: PipelineParams | None = None) -> PipelineResult:
    params = params or PipelineParams()
    tower_set = table.tower_set
    n_users = len(table.user_ids)
    if len(table) == 0:
        funnel = tuple((s, 0) for s in FUNNEL_STAGES)
        return PipelineResult(
            tower_set, table.report, funnel, {}, {}, (), (), None, 0
        )

    order = np.lexsort((table.t, table.user_idx))
    u0 = table.user_idx[order].astype(np.int64)
    c0 = table.cell_idx[order]
    t0 = table.t[order]

    # Duplicate timestamps: last record in file order wins; each displaced
    # record with a different cell counts as one conflict.
    same_key = (u0[1:] == u0[:-1]) & (t0[1:] == t0[:-1])
    n_conflicts = int(np.count_nonzero(same_key & (c0[1:] != c0[:-1])))
    keep = np.ones(len(u0), dtype=bool)
    keep[:-1][same_key] = False

    day0 = t0 // SECONDS_PER_DAY
    min_day = int(day0.min())
    span = int(day0.max()) - min_day + 2  # +1 so evening spill has a key

    # Daily record counts use raw accepted rows, before deduplication.
    ukey0 = u0 * span + (day0 - min_day)
    run_key, run_count = np.unique(ukey0, return_counts=True)

    u = u0[keep]
    c = c0[keep].astype(np.int64)
    ts = t0[keep]
    day = day0[keep]
    ukey = u * span + (day - min_day)
    run_start = np.flatnonzero(np.r_[True, ukey[1:] != ukey[:-1]])
    run_user = u[run_start]
    run_day = day[run_start]

    cfg = params.filters
    weekday_ok = np.zeros(7, dtype=bool)
    weekday_ok[list(cfg.include_days)] = True
    qualifies = (run_count >= cfg.min_daily_records) & weekday_ok[(run_day + 3) % 7]

    iso_cells = geo.isolated_towers(tower_set, cfg.isolation_radius_km)
    iso_mask = np.zeros(len(tower_set.cell_ids), dtype=bool)
    if iso_cells:
        iso_mask[tower_set.indexer(sorted(iso_cells))] = True

    shared = _SharedState(
        tower_set=tower_set,
        params=params,
        span=span,
        min_day=min_day,
        iso_mask=iso_mask,
        u=u,
        c=c,
        ts=ts,
        day=day,
        run_key=run_key,
        run_start=run_start,
        run_user=run_user,
        run_day=run_day,
        qualifies=qualifies,
    )

    bounds = np.linspace(0, n_users, params.threads + 1).astype(np.int64)
    ranges = [(int(bounds[i]), int(bounds[i + 1])) for i in range(params.threads)]
    ranges = [r for r in ranges if r[1] > r[0]]
    if len(ranges) == 1:
        shards = [_analyze_users(shared, *ranges[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            shards = list(pool.map(lambda r: _analyze_users(shared, *r), ranges))

    return _merge_shards(table, params, shards, n_users, n_conflicts)


def analyze_files(
    towers_path,
    record_paths: Sequence,
    params: PipelineParams | None = None,
) -> PipelineResult:
    tower_set = parse_towers(towers_path)
    tables = [RecordTable.from_csv(p, tower_set) for p in record_paths]
    return analyze_table(merge_tables(tables, tower_set), params)


@dataclass
class _SharedState:
    tower_set: TowerSet
    params: PipelineParams
    span: int
    min_day: int
    iso_mask: np.ndarray
    u: np.ndarray
    c: np.ndarray
    ts: np.ndarray
    day: np.ndarray
    run_key: np.ndarray
    run_start: np.ndarray
    run_user: np.ndarray
    run_day: np.ndarray
    qualifies: np.ndarray


def _analyze_users(s: _SharedState, u_lo: int, u_hi: int) -> _Shard:
    """Full per-user pipeline for users with index in [u_lo, u_hi)."""
    r_lo, r_hi = np.searchsorted(s.run_user, [u_lo, u_hi])
    e_lo = int(s.run_start[r_lo]) if r_lo < len(s.run_start) else len(s.u)
    e_hi = int(s.run_start[r_hi]) if r_hi < len(s.run_start) else len(s.u)

    nu = u_hi - u_lo
    reason = np.full(nu, _R_NO_ACTIVE, dtype=np.int8)
    home_of = np.full(nu, -1, dtype=np.int64)
    work_of = np.full(nu, -1, dtype=np.int64)
    distance = np.zeros(nu, dtype=np.float64)
    empty = np.array([], dtype=np.int64)
    if e_lo == e_hi:
        return _Shard(u_lo, reason, home_of, work_of, distance,
                      empty, empty, empty, empty, empty, empty, empty)

    su = s.u[e_lo:e_hi] - u_lo
    sc = s.c[e_lo:e_hi]
    sts = s.ts[e_lo:e_hi]
    sday = s.day[e_lo:e_hi]
    m = len(su)

    run_key = s.run_key[r_lo:r_hi]
    run_user = s.run_user[r_lo:r_hi] - u_lo
    run_day = s.run_day[r_lo:r_hi]
    qualifies = s.qualifies[r_lo:r_hi]
    starts = s.run_start[r_lo:r_hi] - e_lo
    n_runs = len(starts)
    sizes = np.diff(np.r_[starts, m])
    run_of = np.repeat(np.arange(n_runs, dtype=np.int64), sizes)

    # Stay segments: each event holds its cell until the next event of the
    # same user-day, the last until midnight.
    seg_end = np.empty(m, dtype=np.int64)
    seg_end[:-1] = sts[1:]
    seg_end[np.r_[starts[1:] - 1, m - 1]] = (sday[np.r_[starts[1:] - 1, m - 1]] + 1) * SECONDS_PER_DAY

    aw = s.params.anchor_windows
    n_cells = len(s.tower_set.cell_ids)
    day_base = sday * SECONDS_PER_DAY
    rel = sday - s.min_day

    def window_part(lo_abs, hi_abs, target_rel):
        ov = np.minimum(seg_end, hi_abs) - np.maximum(sts, lo_abs)
        sel = ov > 0
        tkey = (su[sel] + u_lo) * s.span + target_rel[sel]
        pos = np.searchsorted(run_key, tkey)
        ok = (pos < n_runs) & (run_key[np.minimum(pos, n_runs - 1)] == tkey)
        return pos[ok], sc[sel][ok], ov[sel][ok]

    hs, he = aw.home_window.start, aw.home_window.end
    ws, we = aw.work_window.start, aw.work_window.end
    parts = [
        (0, *window_part(day_base, day_base + he, rel)),  # home, morning side
        (0, *window_part(day_base + hs, day_base + SECONDS_PER_DAY, rel + 1)),  # home, evening spill
        (1, *window_part(day_base + ws, day_base + we, rel)),  # work
    ]
    key = np.concatenate([(w * n_runs + p) * n_cells + cell for w, p, cell, _ in parts])
    wt = np.concatenate([ov for _, _, _, ov in parts])
    home_cand, work_cand = _dominant_per_run(
        key, wt, n_runs, n_cells,
        home_min=aw.dominance_fraction * aw.home_window.duration - 1e-9,
        work_min=aw.dominance_fraction * aw.work_window.duration - 1e-9,
    )

    active = np.zeros(nu, dtype=bool)
    active[run_user[qualifies]] = True
    reason[active] = _OK

    _vote(run_user[qualifies], home_cand[qualifies], n_cells, home_of)
    _vote(run_user[qualifies], work_cand[qualifies], n_cells, work_of)
    reason[(reason == _OK) & (home_of < 0)] = _R_NO_HOME
    reason[(reason == _OK) & (work_of < 0)] = _R_NO_WORK
    anchored = reason == _OK
    iso = anchored & (s.iso_mask[home_of] | s.iso_mask[work_of])
    reason[iso] = _R_ISOLATED
    accepted = reason == _OK

    lat = s.tower_set.lat
    lon = s.tower_set.lon
    if accepted.any():
        a = np.flatnonzero(accepted)
        distance[a] = geo.haversine_km(
            lat[home_of[a]], lon[home_of[a]], lat[work_of[a]], lon[work_of[a]]
        )

    run_live = qualifies & accepted[run_user]
    elig = run_live[run_of]
    sod = sts - day_base
    home_el = home_of[su]
    work_el = work_of[su]
    cw = s.params.commute_windows

    obs = []
    for direction, origin_el, dest_el, win in (
        (0, home_el, work_el, cw.morning),
        (1, work_el, home_el, cw.night),
    ):
        in_w = (sod >= win.start) & (sod < win.end) & elig
        dep_idx = np.maximum.reduceat(
            np.where(in_w & (sc == origin_el), np.arange(m), -1), starts
        )
        after_dep = np.arange(m) > dep_idx[run_of]
        arr_idx = np.minimum.reduceat(
            np.where(in_w & (sc == dest_el) & after_dep, np.arange(m), m), starts
        )
        got = (dep_idx >= 0) & (arr_idx < m)
        r = np.flatnonzero(got)
        obs.append((r, np.full(len(r), direction, dtype=np.int8),
                    sts[dep_idx[got]], sts[arr_idx[got]]))

    o_run = np.concatenate([o[0] for o in obs])
    o_dir = np.concatenate([o[1] for o in obs])
    o_dep = np.concatenate([o[2] for o in obs])
    o_arr = np.concatenate([o[3] for o in obs])
    oo = np.lexsort((o_dir, o_run))
    o_run, o_dir, o_dep, o_arr = o_run[oo], o_dir[oo], o_dep[oo], o_arr[oo]

    has_obs = np.zeros(nu, dtype=bool)
    has_obs[run_user[o_run]] = True
    reason[accepted & ~has_obs] = _R_NO_OBS

    # Anchors are reported for every user that cleared the anchor stages,
    # including those later dropped for lack of commute observations.
    qa = qualifies & accepted[run_user]
    return _Shard(
        u_lo=u_lo,
        reason=reason,
        home_of=home_of,
        work_of=work_of,
        distance=distance,
        q_run_user=run_user[qa] + u_lo,
        q_run_day=run_day[qa],
        obs_user=run_user[o_run] + u_lo,
        obs_day=run_day[o_run],
        obs_dir=o_dir,
        obs_dep=o_dep,
        obs_arr=o_arr,
    )


def _dominant_per_run(
    key: np.ndarray,
    wt: np.ndarray,
    n_runs: int,
    n_cells: int,
    home_min: float,
    work_min: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per (window, run): the max-dwell cell if it clears the threshold.

    Ties on dwell break to the smallest cell index, which is the
    lexicographically smallest cell id because the pool is sorted.
    """
    home_cand = np.full(n_runs, -1, dtype=np.int64)
    work_cand = np.full(n_runs, -1, dtype=np.int64)
    if not len(key):
        return home_cand, work_cand
    o = np.argsort(key, kind="stable")
    ks = key[o]
    gstart = np.flatnonzero(np.r_[True, ks[1:] != ks[:-1]])
    dwell = np.add.reduceat(wt[o], gstart)
    gkey = ks[gstart]
    wrun = gkey // n_cells
    cell = gkey % n_cells
    o2 = np.lexsort((cell, -dwell, wrun))
    first = o2[np.r_[True, wrun[o2][1:] != wrun[o2][:-1]]]
    w, run = np.divmod(wrun[first], n_runs)
    dw = dwell[first]
    cl = cell[first]
    hsel = (w == 0) & (dw >= home_min)
    home_cand[run[hsel]] = cl[hsel]
    wsel = (w == 1) & (dw >= work_min)
    work_cand[run[wsel]] = cl[wsel]
    return home_cand, work_cand


def _vote(users: np.ndarray, cand: np.ndarray, n_cells: int, out: np.ndarray) -> None:
    """Mode of per-day candidates per user; count ties break to the
    smallest cell index."""
    got = cand >= 0
    if not got.any():
        return
    vk, cnt = np.unique(users[got] * n_cells + cand[got], return_counts=True)
    vu = vk // n_cells
    vc = vk % n_cells
    o = np.lexsort((vc, -cnt, vu))
    first = o[np.r_[True, vu[o][1:] != vu[o][:-1]]]
    out[vu[first]] = vc[first]


def _merge_shards(
    table: RecordTable,
    params: PipelineParams,
    shards: list[_Shard],
    n_users: int,
    n_conflicts: int,
) -> PipelineResult:
    reason = np.concatenate([s.reason for s in shards])
    home_of = np.concatenate([s.home_of for s in shards])
    work_of = np.concatenate([s.work_of for s in shards])
    distance = np.concatenate([s.distance for s in shards])
    q_user = np.concatenate([s.q_run_user for s in shards])
    q_day = np.concatenate([s.q_run_day for s in shards])
    obs_user = np.concatenate([s.obs_user for s in shards])
    obs_day = np.concatenate([s.obs_day for s in shards])
    obs_dir = np.concatenate([s.obs_dir for s in shards])
    obs_dep = np.concatenate([s.obs_dep for s in shards])
    obs_arr = np.concatenate([s.obs_arr for s in shards])

    drop = np.bincount(reason, minlength=6)
    counts = [n_users]
    for code in (_R_NO_ACTIVE, _R_NO_HOME, _R_NO_WORK, _R_ISOLATED, _R_NO_OBS):
        counts.append(counts[-1] - int(drop[code]))
    funnel = tuple(zip(FUNNEL_STAGES, counts))

    pool = table.user_ids
    rejections = {
        str(pool[i]): _REASON_LABEL[int(r)]
        for i, r in enumerate(reason)
        if r != _OK
    }

    cells = table.tower_set.cell_ids
    qd_start = np.flatnonzero(np.r_[True, q_user[1:] != q_user[:-1]]) if len(q_user) else np.array([], dtype=np.int64)
    qd_end = np.r_[qd_start[1:], len(q_user)]
    anchors: dict[str, AnchorSet] = {}
    for a, b in zip(qd_start, qd_end):
        uid = int(q_user[a])
        anchors[str(pool[uid])] = AnchorSet(
            user_id=str(pool[uid]),
            home_cell=cells[int(home_of[uid])],
            work_cell=cells[int(work_of[uid])],
            qualifying_days=tuple(int(d) for d in q_day[a:b]),
            distance_km=float(distance[uid]),
        )

    observations = tuple(
        CommuteObservation(
            user_id=str(pool[int(ui)]),
            day=int(d),
            direction=MORNING if dr == 0 else NIGHT,
            depart_ts=int(dp),
            arrive_ts=int(ar),
            distance_km=float(distance[int(ui)]),
        )
        for ui, d, dr, dp, ar in zip(obs_user, obs_day, obs_dir, obs_dep, obs_arr)
    )

    summaries = []
    ob_start = np.flatnonzero(np.r_[True, obs_user[1:] != obs_user[:-1]]) if len(obs_user) else np.array([], dtype=np.int64)
    ob_end = np.r_[ob_start[1:], len(obs_user)]
    dur_h = (obs_arr - obs_dep) / 3600.0
    for a, b in zip(ob_start, ob_end):
        uid = int(obs_user[a])
        morning = [float(x) for x in dur_h[a:b][obs_dir[a:b] == 0]]
        night = [float(x) for x in dur_h[a:b][obs_dir[a:b] == 1]]
        summaries.append(
            UserCommuteSummary(
                user_id=str(pool[uid]),
                distance_km=float(distance[uid]),
                mean_morning_h=math.fsum(morning) / len(morning) if morning else None,
                mean_night_h=math.fsum(night) / len(night) if night else None,
                n_morning=len(morning),
                n_night=len(night),
            )
        )

    stats = compute_cohort_stats(summaries, observations, params.stats) if summaries else None
    return PipelineResult(
        tower_set=table.tower_set,
        report=table.report,
        funnel=funnel,
        rejections=rejections,
        anchors=anchors,
        observations=observations,
        summaries=tuple(summaries),
        stats=stats,
        n_conflicts=n_conflicts,
    )
