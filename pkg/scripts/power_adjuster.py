"""Interfered and interfering tag throughput with the reflection power adjuster on and off."""

import argparse

from _out import csv_out

from trident_sim import netsim
from trident_sim.experiments import corridor

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--distances", default="0.1,0.2,0.3,0.4,0.5,0.75,1.0,1.5")
p.add_argument("--out")
a = p.parse_args()

rows = netsim.power_adjuster_ablation(corridor(7, 0), [float(d) for d in a.distances.split(",")])
with csv_out(a.out, ["distance_m", "adjuster", "interfered_bps", "interfering_bps", "interfering_excessive"]) as w:
    for r in rows:
        w.writerow([r.distance_m, int(r.adjuster), f"{r.interfered_bps:.0f}", f"{r.interfering_bps:.0f}",
                    int(r.interfering_excessive)])
