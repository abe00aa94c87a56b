"""The whole toolchain through the command line, in a throwaway directory.

    commutekit synth        -> towers.csv, records.csv, ground_truth.csv
    commutekit analyze      -> report bundle + run manifest
    commutekit towers-stats -> nearest-neighbor spacing of the layout
    commutekit compare      -> diff two bundles by their summary.json

`analyze` is config-driven; the INI below is the complete surface.  Run
the script from anywhere, it cleans up after itself.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

SYNTH_INI = """\
[synth]
seed = 11
n_agents = 400
n_days = 3
n_isolated_agents = 2

[layout]
n_isolated = 1
"""

ANALYZE_INI = """\
[paths]
towers = cohort/towers.csv
records = cohort/records.csv
out = report

[filters]
min_daily_records = 1   ; synthetic cohorts emit ~100 records/day

[run]
threads = 2
"""


def run(*args):
    cmd = [sys.executable, "-m", "commutekit", *args]
    print(f"$ commutekit {' '.join(args)}")
    subprocess.run(cmd, check=True)


with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    (root / "synth.ini").write_text(SYNTH_INI)
    (root / "run.ini").write_text(ANALYZE_INI)

    run("synth", "--config", str(root / "synth.ini"), "--out", str(root / "cohort"))
    run("analyze", "--config", str(root / "run.ini"), "--dump-observations")
    run("towers-stats", "--towers", str(root / "cohort" / "towers.csv"),
        "--out", str(root / "nn"))

    print("\nreport bundle:")
    for p in sorted((root / "report").iterdir()):
        print(f"  {p.name:<24} {p.stat().st_size:>8} bytes")

    manifest = json.loads((root / "report" / "run_manifest.json").read_text())
    print(f"\n{manifest['rows_total']:,} rows in {manifest['wall_time_s']} s "
          f"({manifest['records_per_second']:,} records/s)")
    funnel = (root / "report" / "filter_funnel.csv").read_text().splitlines()[1:]
    print("funnel:", " -> ".join(line.replace(",", "=") for line in funnel))

    print("\ntower spacing CDF (fraction of towers with a neighbor within x km):")
    for line in (root / "nn" / "tower_nn_cdf.csv").read_text().splitlines()[1:6]:
        band, frac = line.split(",")
        print(f"  <= {float(band):5.2f} km   {float(frac):6.1%}")

    # A bundle always compares clean against itself; rerun to prove it.
    print()
    run("compare", str(root / "report"), str(root / "report"))
