"""One user, one day, by hand: from raw records to home and work anchors.

The pipeline assumes a user stays at the cell of their last record until
a record appears in a different cell.  This script builds a tiny record
stream, shows the stay segments that fall out, scores the anchor windows
and runs the dominance rule, so you can see every inference step that
the engine performs in bulk.
"""

import datetime as dt

from commutekit import clock
from commutekit.anchors import AnchorWindows
from commutekit.ingest import CellTower, GeoPoint, TowerSet, TrafficRecord
from commutekit.trajectory import build_day_trajectories, dominant_location, dwell_by_cell

towers = TowerSet([
    CellTower("HOME", GeoPoint(39.90, 116.40)),
    CellTower("WORK", GeoPoint(39.95, 116.45)),
    CellTower("CAFE", GeoPoint(39.92, 116.42)),
])

monday = clock.day_number(dt.date(2012, 1, 2))
sunday = monday - 1


def at(day, hhmm, cell):
    return TrafficRecord("alice", cell, day * 86400 + clock.parse_clock(hhmm))


records = [
    at(sunday, "19:30", "HOME"),   # the evening before anchors the night window
    at(monday, "01:10", "HOME"),   # a night ping; 00:00-01:10 stays unattributed
    at(monday, "08:05", "HOME"),   # last record at home: estimated departure
    at(monday, "08:52", "WORK"),   # first record at work: estimated arrival
    at(monday, "12:30", "CAFE"),   # lunch break splits the work stay
    at(monday, "13:10", "WORK"),
    at(monday, "18:20", "HOME"),
]

alice = build_day_trajectories(records)["alice"]
traj = alice[monday]
print("stay segments on Monday (time before the first record is unattributed):")
for seg in traj.segments:
    start = clock.format_clock(seg.start_ts - monday * 86400)
    end = clock.format_clock(seg.end_ts - monday * 86400)
    print(f"  {start} - {end}  {seg.cell_id}")

windows = AnchorWindows()
print(f"\nhome window {windows.home_window} wraps midnight, so its evening part")
print("comes from Sunday's trajectory:")
home_dwell = dwell_by_cell(traj, windows.home_window, alice[sunday])
for cell, seconds in sorted(home_dwell.items()):
    print(f"  {cell:<5} {seconds / 3600:5.2f} h")
print("home anchor:", dominant_location(home_dwell, windows.home_window,
                                        windows.dominance_fraction))

work_dwell = dwell_by_cell(traj, windows.work_window)
print(f"\nwork window {windows.work_window}:")
for cell, seconds in sorted(work_dwell.items()):
    print(f"  {cell:<5} {seconds / 3600:5.2f} h")
print("work anchor:", dominant_location(work_dwell, windows.work_window,
                                        windows.dominance_fraction))

print("\nThe lunch detour cost WORK an hour of dwell but not its dominance:")
print("an anchor needs at least half the window, not all of it.")
