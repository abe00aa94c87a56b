"""Synthetic cohort generator tests.

The generator is itself an oracle for the pipeline, so these tests pin down
its own contracts: exact mixture apportionment, record/truth consistency,
the emission-gap property that bounds the estimator's bias, and byte-level
determinism.
"""

import datetime as dt
import io
import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commutekit import clock, geo, ingest, synth
from commutekit.stats import DistanceGroup, StatsConfig


def small_layout(**kw):
    return synth.TowerLayoutConfig(nx=12, ny=12, spacing_km=1.5, jitter_km=0.3, **kw)


def small_config(**kw):
    kw.setdefault("layout", small_layout())
    kw.setdefault("n_agents", 40)
    kw.setdefault("n_days", 3)
    mixture = kw.pop("mixture", None)
    if mixture is None:
        # The 12x12 grid spans ~23 km diagonally; keep groups realizable.
        mixture = {"0-2km": 0.5, "2-6km": 0.3, "6-15km": 0.2}
    return synth.SynthConfig(seed=11, mixture=mixture, **kw)


# -- apportionment -------------------------------------------------------------


def test_apportion_exact_total():
    counts = synth.apportion(8500, [0.565, 0.235, 0.14, 0.03, 0.03])
    assert sum(counts) == 8500
    assert counts == [4803, 1997, 1190, 255, 255]


def test_apportion_remainder_ties_to_earlier():
    # Ideal shares 1.5/1.5: one leftover seat goes to the first index.
    assert synth.apportion(3, [0.5, 0.5]) == [2, 1]


def test_apportion_zero_weight_gets_zero():
    assert synth.apportion(10, [1.0, 0.0, 1.0]) == [5, 0, 5]


@settings(max_examples=100)
@given(
    st.integers(min_value=0, max_value=5000),
    st.lists(st.floats(min_value=0, max_value=10), min_size=1, max_size=8).filter(
        lambda w: sum(w) > 0
    ),
)
def test_apportion_properties(total, weights):
    counts = synth.apportion(total, weights)
    assert sum(counts) == total
    assert all(c >= 0 for c in counts)
    wsum = math.fsum(weights)
    for c, w in zip(counts, weights):
        assert abs(c - total * w / wsum) < 1.0 + 1e-9


def test_apportion_validation():
    with pytest.raises(ValueError):
        synth.apportion(-1, [1.0])
    with pytest.raises(ValueError):
        synth.apportion(5, [0.0, 0.0])
    with pytest.raises(ValueError):
        synth.apportion(5, [1.0, -0.5])


# -- calendar ------------------------------------------------------------------


def test_analysis_days_skip_weekends():
    cfg = small_config(n_days=7, start_date=dt.date(2012, 1, 5))  # a Thursday
    days = synth.analysis_days(cfg)
    assert len(days) == 7
    assert all(clock.weekday_of_day(d) < 5 for d in days)
    # Thu, Fri, then the following Mon..Fri.
    assert days[1] - days[0] == 1
    assert days[2] - days[1] == 3


def test_analysis_days_weekends_allowed():
    cfg = small_config(n_days=4, start_date=dt.date(2012, 1, 6), weekday_only=False)
    days = synth.analysis_days(cfg)
    assert [d - days[0] for d in days] == [0, 1, 2, 3]


# -- tower layout --------------------------------------------------------------


def test_generate_towers_shapes_and_isolation():
    layout = small_layout(n_isolated=3)
    rng = np.random.default_rng(0)
    lat, lon, n_core = synth.generate_towers(layout, rng)
    assert n_core == 144
    assert len(lat) == 147
    nn = geo.nearest_neighbor_km(lat, lon)
    # Grid towers are packed well under 15 km; the extra towers are beyond.
    assert nn[:n_core].max() < 15.0
    assert nn[n_core:].min() > 15.0


def test_towers_csv_round_trips_through_ingest():
    layout = small_layout(n_isolated=1)
    lat, lon, _ = synth.generate_towers(layout, np.random.default_rng(0))
    ts = ingest.parse_towers(synth.towers_csv_bytes(lat, lon))
    assert len(ts) == len(lat)
    assert ts.cell_ids[0] == "T00000"
    # %.7f is sub-metre: parsed coordinates stay within half a ULP of it.
    assert abs(ts["T00001"].location.lat - lat[1]) < 5e-8 + 1e-12


# -- cohort generation ---------------------------------------------------------


@pytest.fixture(scope="module")
def bundle():
    return synth.generate_cohort(small_config())


@pytest.fixture(scope="module")
def parsed(bundle):
    tower_set = ingest.parse_towers(bundle.towers_csv)
    table = ingest.RecordTable.from_csv(bundle.records_csv, tower_set)
    return tower_set, table


def test_everything_generated_parses_cleanly(bundle, parsed):
    _, table = parsed
    assert table.report.rows_rejected == 0
    assert table.report.rows_total == len(table) > 0
    assert len(np.unique(table.user_idx)) == 40


def test_planted_group_counts_exact(bundle):
    cfg = small_config()
    counts = defaultdict(int)
    for agent in bundle.truth.agents:
        group = None
        for g in DistanceGroup:
            if g.lo <= agent.distance_km < g.hi:
                group = g
        counts[group.label] += 1
    weights = [cfg.mixture.get(g.label, 0.0) for g in DistanceGroup]
    want = synth.apportion(40, weights)
    assert [counts[g.label] for g in DistanceGroup] == want


def test_planted_distances_match_tower_geometry(bundle, parsed):
    tower_set, _ = parsed
    for agent in bundle.truth.agents:
        h = tower_set[agent.home_cell].location
        w = tower_set[agent.work_cell].location
        d = float(geo.haversine_km(h.lat, h.lon, w.lat, w.lon))
        # Truth stores full-precision distance; the CSV rounds coordinates.
        assert abs(d - agent.distance_km) < 1e-3
        assert agent.home_cell != agent.work_cell


def test_records_only_at_anchor_towers(bundle, parsed):
    tower_set, table = parsed
    cells_by_agent = defaultdict(set)
    for u, c in zip(table.user_idx, table.cell_idx):
        cells_by_agent[str(table.user_ids[u])].add(tower_set.cell_ids[c])
    for agent in bundle.truth.agents:
        assert cells_by_agent[agent.agent_id] <= {agent.home_cell, agent.work_cell}


def test_occupancy_respects_truth(bundle, parsed):
    """No record contradicts the planted movement timeline.

    While commuting (dep, arr) the agent is silent; at the work anchor the
    first record lands within one emission interval of the true arrival.
    """
    tower_set, table = parsed
    E = bundle.truth.emission_interval_s
    per_agent = defaultdict(list)
    for u, c, t in zip(table.user_idx, table.cell_idx, table.t):
        per_agent[str(table.user_ids[u])].append((int(t), tower_set.cell_ids[c]))
    for agent in bundle.truth.agents:
        events = sorted(per_agent[agent.agent_id])
        for day in agent.days:
            base = day.day * clock.SECONDS_PER_DAY
            day_events = [(t, c) for t, c in events if base <= t < base + clock.SECONDS_PER_DAY]
            for t, c in day_events:
                if day.dep_morning < t < day.arr_morning or day.dep_night < t < day.arr_night:
                    pytest.fail(f"record during transit at {clock.format_timestamp(t)}")
                if day.arr_morning <= t <= day.dep_night:
                    assert c == agent.work_cell
                else:
                    assert c == agent.home_cell
            work_times = [t for t, c in day_events if c == agent.work_cell]
            assert work_times, "agent never seen at work"
            assert day.arr_morning <= min(work_times) < day.arr_morning + E
            home_before = [t for t, _ in day_events if t <= day.dep_morning]
            assert day.dep_morning - E < max(home_before) <= day.dep_morning


def test_estimator_bias_bound_structurally_guaranteed(bundle, parsed):
    # Last home record before dep, first work record after arr: the window
    # estimator's error is phi + psi in [0, 2E). Checked per agent-day.
    tower_set, table = parsed
    E = bundle.truth.emission_interval_s
    per_agent = defaultdict(list)
    for u, c, t in zip(table.user_idx, table.cell_idx, table.t):
        per_agent[str(table.user_ids[u])].append((int(t), tower_set.cell_ids[c]))
    for agent in bundle.truth.agents:
        events = sorted(per_agent[agent.agent_id])
        for day in agent.days:
            lo = day.day * clock.SECONDS_PER_DAY + clock.parse_clock("06:00")
            hi = day.day * clock.SECONDS_PER_DAY + clock.parse_clock("10:00")
            home_in = [t for t, c in events if lo <= t < hi and c == agent.home_cell]
            dep = max(home_in)
            work_after = [t for t, c in events if dep < t < hi and c == agent.work_cell]
            arr = min(work_after)
            err = (arr - dep) - (day.arr_morning - day.dep_morning)
            assert 0 <= err < 2 * E


def test_warmup_evening_before_first_day(bundle, parsed):
    tower_set, table = parsed
    days = synth.analysis_days(small_config())
    warmup_day = days[0] - 1
    base = warmup_day * clock.SECONDS_PER_DAY
    mask = (table.t >= base) & (table.t < base + clock.SECONDS_PER_DAY)
    assert mask.sum() > 0
    # Warmup records sit in the evening, at the agent's home tower.
    assert (table.t[mask] % clock.SECONDS_PER_DAY).min() >= clock.parse_clock("19:00")
    homes = {a.agent_id: a.home_cell for a in bundle.truth.agents}
    for u, c in zip(table.user_idx[mask], table.cell_idx[mask]):
        assert tower_set.cell_ids[c] == homes[str(table.user_ids[u])]
    # Interior analysis days need no warmup: the preceding day is itself
    # an analysis day and supplies the evening.
    for d in days[1:]:
        assert d - 1 in days


def test_record_csv_is_fixed_width(bundle):
    lines = bundle.records_csv.split(b"\n")
    assert lines[0] == b"user_id,cell_id,start_time,end_time"
    assert lines[-1] == b""
    body = lines[1:-1]
    assert all(len(line) == 34 for line in body)
    assert all(line.endswith(b",") for line in body)  # end_time left empty


def test_ground_truth_csv_shape(bundle):
    text = bundle.truth.to_csv()
    lines = text.strip().split("\n")
    assert lines[0].startswith("agent_id,home_cell,work_cell,distance_km")
    assert len(lines) == 1 + 40 * 3  # agents x days


# -- determinism ---------------------------------------------------------------


def test_byte_determinism():
    a = synth.generate_cohort(small_config())
    b = synth.generate_cohort(small_config())
    assert a.towers_csv == b.towers_csv
    assert a.records_csv == b.records_csv
    assert a.truth == b.truth


def test_seed_changes_output():
    base = small_config()
    a = synth.generate_cohort(base)
    b = synth.generate_cohort(
        synth.SynthConfig(seed=12, n_agents=40, n_days=3, layout=small_layout(), mixture=base.mixture)
    )
    assert a.records_csv != b.records_csv


# -- duration models -----------------------------------------------------------


def test_linear_flat_durations(bundle):
    cfg = small_config()
    m = cfg.duration
    for agent in bundle.truth.agents:
        d = agent.distance_km
        for day in agent.days:
            assert day.morning_h == pytest.approx(
                m.slope_h_per_km * d + m.intercept_morning_h, abs=1 / 3600
            )
            assert day.night_h == pytest.approx(
                m.slope_h_per_km * d + m.intercept_night_h, abs=1 / 3600
            )


def test_durations_constant_across_days(bundle):
    for agent in bundle.truth.agents:
        assert len({d.arr_morning - d.dep_morning for d in agent.days}) == 1
        assert len({d.arr_night - d.dep_night for d in agent.days}) == 1


def test_fixed_durations():
    cfg = small_config(
        duration=synth.DurationModel(kind="fixed", fixed_morning_h=0.4, fixed_night_h=0.3)
    )
    out = synth.generate_cohort(cfg)
    for agent in out.truth.agents:
        assert agent.days[0].morning_h == pytest.approx(0.4)
        assert agent.days[0].night_h == pytest.approx(0.3)


def test_group_bands_exact_component_counts():
    bands = {
        "0-2km": ((0.64, 0.10, 0.20), (0.36, 0.30, 0.45)),
        "2-6km": ((1.0, 0.40, 0.90),),
        "6-15km": ((1.0, 1.10, 1.40),),
    }
    cfg = small_config(duration=synth.DurationModel(kind="group_bands", bands=bands))
    out = synth.generate_cohort(cfg)
    counts = defaultdict(lambda: [0, 0])
    for agent in out.truth.agents:
        if agent.distance_km < 2.0:
            h = agent.days[0].morning_h
            assert 0.10 <= h <= 0.45
            counts["0-2km"][0 if h <= 0.20 else 1] += 1
    # 20 agents in 0-2km at weights 0.64/0.36: exactly 13/7.
    assert counts["0-2km"] == [13, 7]


def test_group_bands_missing_group_fails():
    bands = {"0-2km": ((1.0, 0.1, 0.2),)}
    with pytest.raises(synth.SynthError, match="2-6km"):
        synth.generate_cohort(
            small_config(duration=synth.DurationModel(kind="group_bands", bands=bands))
        )


# -- unsatisfiable configurations ----------------------------------------------


def test_unrealizable_group_names_the_group():
    # A 2x2 grid spans under 3 km: nothing realizes 6-15km.
    cfg = synth.SynthConfig(
        seed=1,
        n_agents=5,
        layout=synth.TowerLayoutConfig(nx=2, ny=2, spacing_km=1.2, jitter_km=0.0),
        mixture={"6-15km": 1.0},
    )
    with pytest.raises(synth.SynthError, match="6-15km"):
        synth.generate_cohort(cfg)


def test_oversized_duration_rejected():
    cfg = small_config(
        n_agents=5,
        duration=synth.DurationModel(kind="fixed", fixed_morning_h=5.0, fixed_night_h=0.5),
    )
    with pytest.raises(synth.SynthError, match="fit the commute windows"):
        synth.generate_cohort(cfg)


def test_sub_minute_duration_rejected():
    cfg = small_config(
        n_agents=5,
        duration=synth.DurationModel(kind="fixed", fixed_morning_h=0.005, fixed_night_h=0.5),
    )
    with pytest.raises(synth.SynthError):
        synth.generate_cohort(cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(mixture={"0-2km": 0.5})  # does not sum to 1
    with pytest.raises(ValueError):
        small_config(mixture={"0-2km": 0.5, "nope": 0.5})
    with pytest.raises(ValueError):
        small_config(n_isolated_agents=1)  # layout has no isolated towers
    with pytest.raises(ValueError):
        synth.TowerLayoutConfig(jitter_km=1.0, spacing_km=1.2)
    with pytest.raises(ValueError):
        synth.DurationModel(kind="warp")
    with pytest.raises(ValueError):
        synth.DurationModel(kind="group_bands", bands=None)


# -- isolated agents and transit -----------------------------------------------


def test_isolated_agents_live_on_isolated_towers():
    cfg = small_config(
        n_agents=20,
        n_isolated_agents=3,
        layout=small_layout(n_isolated=2),
        mixture={"0-2km": 0.6, "2-6km": 0.4},
    )
    out = synth.generate_cohort(cfg)
    iso = [a for a in out.truth.agents if a.expect_isolated]
    assert len(iso) == 3
    assert [a.agent_id for a in iso] == ["u00017", "u00018", "u00019"]
    n_core = 144
    for a in iso:
        assert int(a.home_cell[1:]) >= n_core
        assert int(a.work_cell[1:]) < n_core
        assert a.distance_km > 15.0


def test_transit_records_at_third_tower():
    cfg = small_config(n_agents=6, emit_transit_every_s=120, mixture={"6-15km": 1.0})
    out = synth.generate_cohort(cfg)
    tower_set = ingest.parse_towers(out.towers_csv)
    table = ingest.RecordTable.from_csv(out.records_csv, tower_set)
    anchors = {a.agent_id: {a.home_cell, a.work_cell} for a in out.truth.agents}
    extra = 0
    for u, c in zip(table.user_idx, table.cell_idx):
        if tower_set.cell_ids[c] not in anchors[str(table.user_ids[u])]:
            extra += 1
    assert extra > 0


# -- continuous emission -------------------------------------------------------


def test_continuous_mode_emits_dense_grid():
    cfg = small_config(n_agents=4, emission_mode="continuous", emission_interval_s=60)
    out = synth.generate_cohort(cfg)
    tower_set = ingest.parse_towers(out.towers_csv)
    table = ingest.RecordTable.from_csv(out.records_csv, tower_set)
    days = synth.analysis_days(cfg)
    for agent_pos in range(4):
        uid = f"u{agent_pos:05d}"
        u = list(table.user_ids).index(uid)
        ts = np.sort(table.t[table.user_idx == u])
        base = days[0] * clock.SECONDS_PER_DAY
        day_ts = ts[(ts >= base) & (ts < base + clock.SECONDS_PER_DAY)]
        # At one record a minute minus the silent commutes, a day still has
        # well over 60 records an hour on average across occupied time.
        assert len(day_ts) > 1200
        assert (day_ts % 60 == 0).all()  # aligned to the day grid


def test_true_metrics_from_fixed_cohort():
    cfg = small_config(
        duration=synth.DurationModel(kind="fixed", fixed_morning_h=0.5, fixed_night_h=0.25)
    )
    out = synth.generate_cohort(cfg)
    tm = synth.true_metrics(out.truth, StatsConfig())
    assert tm.n_users == 40
    assert dict(tm.cdf["morning"])[0.5] == 1.0
    assert dict(tm.cdf["morning"])[0.4] == 0.0
    assert tm.marchetti.daily_budget_h == pytest.approx(0.75)
    weights = [cfg.mixture.get(g.label, 0.0) for g in DistanceGroup]
    want = synth.apportion(40, weights)
    assert [tm.group_counts[g.label] for g in DistanceGroup] == want
