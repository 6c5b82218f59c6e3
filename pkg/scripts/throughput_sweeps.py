"""Trident vs TDMA throughput on the corridor testbed, averaged over tag placements.

    python scripts/throughput_sweeps.py --param reporting_rate
    python scripts/throughput_sweeps.py --param reader_spacing --values 1.4,1.8,2.2
"""

import argparse

import numpy as np
from _out import csv_out

from trident_sim.experiments import placement_sweep

DEFAULTS = {
    "reporting_rate": ("150,200,250,300,350,400", 6),
    "tag_count": ("1,2,3,4,5,6,7", 7),
    "reader_spacing": ("1.4,1.8,2.2", 7),
    "deployment": ("uniform,left,front", 7),
}

p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
p.add_argument("--param", choices=DEFAULTS, default="reporting_rate")
p.add_argument("--values")
p.add_argument("--tags", type=int, help="tags per placement (default depends on --param)")
p.add_argument("--placements", type=int, default=40)
p.add_argument("--seeds", choices=("common", "derived"), default="common")
p.add_argument("--out")
a = p.parse_args()

raw, n_tags = DEFAULTS[a.param]
vals = (a.values or raw).split(",")
vals = vals if a.param == "deployment" else [int(v) if a.param == "tag_count" else float(v) for v in vals]
tp = placement_sweep(a.param, vals, a.tags or n_tags, a.placements, a.seeds)
mean, sd = tp.mean(axis=0), tp.std(axis=0, ddof=1) if a.placements > 1 else np.zeros(tp.shape[1:])
with csv_out(a.out, ["param", "value", "trident_bps", "trident_sd", "tdma_bps", "tdma_sd", "ratio"]) as w:
    for v, m, s in zip(vals, mean, sd):
        w.writerow([a.param, v, f"{m[0]:.1f}", f"{s[0]:.1f}", f"{m[1]:.1f}", f"{s[1]:.1f}", f"{m[0] / m[1]:.3f}"])
