"""INI config loading tests."""

import datetime as dt
import json

import pytest

from commutekit import config, synth
from commutekit.config import ConfigError, load_analyze_config, load_synth_config


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


MINIMAL = """
[paths]
towers = towers.csv
records = records.csv
out = out
"""


def test_minimal_analyze_config(tmp_path):
    cfg = load_analyze_config(write(tmp_path, MINIMAL))
    assert cfg.towers == tmp_path / "towers.csv"
    assert cfg.records == (tmp_path / "records.csv",)
    assert cfg.out == tmp_path / "out"
    p = cfg.params
    assert p.filters.min_daily_records == 1500
    assert p.filters.isolation_radius_km == 15.0
    assert p.filters.include_days == frozenset({0, 1, 2, 3, 4})
    assert str(p.anchor_windows.home_window) == "19:00:00-07:00:00"
    assert str(p.commute_windows.morning) == "06:00:00-10:00:00"
    assert p.stats.threshold_km == 18.0
    assert p.threads == 1
    assert cfg.dump_observations is False


def test_full_analyze_config(tmp_path):
    cfg = load_analyze_config(
        write(
            tmp_path,
            """
[paths]
towers = data/towers.csv
records = a.csv, b.csv  c.csv
out = results

[filters]
min_daily_records = 30   ; calibration runs use a lower floor
isolation_radius_km = 12.5
weekdays = mon tue wed

[anchor_windows]
home = 20:00-06:00
work = 08:30-17:30
dominance_fraction = 0.6

[commute_windows]
morning = 06:30-09:30
night = 16:30-20:30

[stats]
bin_km = 2.0
hist_edges_h = 0.2, 0.4, 0.8
cdf_grid_h = 0.5:2.0:0.5
schedule_edges_h = 1.0
threshold_km = 15.0

[run]
threads = 4
dump_observations = yes
""",
        )
    )
    assert [r.name for r in cfg.records] == ["a.csv", "b.csv", "c.csv"]
    assert cfg.records[0].parent == tmp_path
    p = cfg.params
    assert p.filters.min_daily_records == 30
    assert p.filters.include_days == frozenset({0, 1, 2})
    assert str(p.anchor_windows.home_window) == "20:00:00-06:00:00"
    assert p.anchor_windows.dominance_fraction == 0.6
    assert str(p.commute_windows.night) == "16:30:00-20:30:00"
    assert p.stats.hist_edges_h == (0.2, 0.4, 0.8)
    assert p.stats.cdf_grid_h == (0.5, 1.0, 1.5, 2.0)
    assert p.stats.schedule_edges_h == (1.0,)
    assert p.threads == 4
    assert cfg.dump_observations is True


def test_missing_paths_section(tmp_path):
    with pytest.raises(ConfigError, match="paths"):
        load_analyze_config(write(tmp_path, "[filters]\nmin_daily_records = 5\n"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_analyze_config(tmp_path / "absent.ini")


@pytest.mark.parametrize(
    "section,line",
    [
        ("[filters]", "min_daily_records = soon"),
        ("[filters]", "weekdays = funday"),
        ("[filters]", "min_daily_records = 0"),
        ("[anchor_windows]", "home = 19:00"),
        ("[anchor_windows]", "home = 09:00-18:00"),  # must wrap
        ("[anchor_windows]", "dominance_fraction = 2.0"),
        ("[commute_windows]", "morning = 25:00-26:00"),
        ("[stats]", "cdf_grid_h = 3.0:1.0:0.5"),
        ("[stats]", "bin_km = zero"),
        ("[run]", "threads = 0"),
        ("[run]", "dump_observations = maybe"),
    ],
)
def test_bad_values_raise_config_error(tmp_path, section, line):
    with pytest.raises(ConfigError):
        load_analyze_config(write(tmp_path, MINIMAL + f"\n{section}\n{line}\n"))


def test_weekdays_all(tmp_path):
    cfg = load_analyze_config(write(tmp_path, MINIMAL + "\n[filters]\nweekdays = all\n"))
    assert cfg.params.filters.include_days == frozenset(range(7))


def test_analyze_echo_serializes(tmp_path):
    cfg = load_analyze_config(write(tmp_path, MINIMAL))
    echo = config.analyze_echo(cfg.params)
    payload = json.loads(json.dumps(echo, sort_keys=True))
    assert payload["filters"]["weekdays"] == "mon,tue,wed,thu,fri"
    assert payload["anchor_windows"]["home"] == "19:00:00-07:00:00"
    assert "paths" not in payload  # summaries stay byte-comparable across hosts


def test_synth_config_defaults(tmp_path):
    cfg = load_synth_config(write(tmp_path, "", name="synth.ini"))
    assert cfg == synth.SynthConfig()


def test_synth_config_full(tmp_path):
    cfg = load_synth_config(
        write(
            tmp_path,
            """
[synth]
seed = 42
n_agents = 120
n_days = 3
start_date = 2012-03-05
weekday_only = no
emission_mode = continuous
emission_interval_s = 30
n_isolated_agents = 2
transit_every_s = 0

[layout]
nx = 10
ny = 8
spacing_km = 1.5
n_isolated = 2

[mixture]
g0_2 = 0.5
g2_6 = 0.5

[duration]
kind = group_bands

[duration.bands]
g0_2 = 0.64:0.10:0.20, 0.36:0.30:0.45
g2_6 = 1:0.4:0.9

[schedule]
depart_morning = 07:30
wake = 04:00
""",
            name="synth.ini",
        )
    )
    assert cfg.seed == 42
    assert cfg.start_date == dt.date(2012, 3, 5)
    assert cfg.weekday_only is False
    assert cfg.emission_mode == "continuous"
    assert cfg.emit_transit_every_s is None  # zero means off
    assert cfg.layout.nx == 10
    assert cfg.layout.n_isolated == 2
    assert cfg.mixture == {"0-2km": 0.5, "2-6km": 0.5}
    assert cfg.duration.bands == {
        "0-2km": ((0.64, 0.10, 0.20), (0.36, 0.30, 0.45)),
        "2-6km": ((1.0, 0.4, 0.9),),
    }
    assert cfg.schedule.depart_morning_sod == 27000
    assert cfg.schedule.wake_sod == 14400


def test_synth_transit_enabled(tmp_path):
    cfg = load_synth_config(write(tmp_path, "[synth]\ntransit_every_s = 90\n"))
    assert cfg.emit_transit_every_s == 90


@pytest.mark.parametrize(
    "body",
    [
        "[mixture]\nnope = 1.0\n",
        "[mixture]\ng0_2 = half\n",
        "[duration]\nkind = warp\n",
        "[duration.bands]\ng0_2 = 1:0.5\n",
        "[synth]\nstart_date = yesterday\n",
        "[synth]\nemission_mode = telepathy\n",
        "[synth]\nn_agents = 0\n",
    ],
)
def test_bad_synth_values(tmp_path, body):
    with pytest.raises(ConfigError):
        load_synth_config(write(tmp_path, body, name="synth.ini"))


def test_synth_echo_serializes():
    echo = config.synth_echo(synth.SynthConfig())
    payload = json.loads(json.dumps(echo, sort_keys=True))
    assert payload["synth"]["n_agents"] == 1000
    assert payload["mixture"]["0-2km"] == 0.565
    assert payload["duration"]["bands"] == {}
