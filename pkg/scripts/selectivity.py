"""Backscatter power at each reader when each corridor tag is forced onto each band."""

import argparse

from _out import csv_out

from trident_sim import netsim
from trident_sim.config import parse_scenario_text

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--seed", type=int, default=0)
p.add_argument("--out")
a = p.parse_args()

sc = parse_scenario_text(f'preset = "fig8"\n[sim]\nseed = {a.seed}\n')
pw, bands = netsim.backscatter_selectivity(sc)
with csv_out(a.out, ["tag", "reader", "reader_band", "tag_band", "power_dbm", "below_in_band_db"]) as w:
    for t, tag in enumerate(sc.tags):
        for j, rd in enumerate(sc.readers):
            ref = pw[t, j, bands[j]]
            for k in range(len(sc.bands_hz)):
                w.writerow([tag.id, rd.id, int(bands[j]), k, f"{pw[t, j, k]:.3f}", f"{ref - pw[t, j, k]:.3f}"])
