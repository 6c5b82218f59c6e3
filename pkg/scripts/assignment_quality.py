"""Same-band adjacent reader pairs: genetic assignment vs best of N random assignments.

Wide area: jittered 4x5 hexagonal field. Narrow area: 20 readers scattered over 20 m x 20 m.
"""

import argparse

from _out import csv_out

from trident_sim.config import generate_scenario
from trident_sim.experiments import ga_vs_random

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--seeds", type=int, default=20)
p.add_argument("--samples", type=int, default=200_000)
p.add_argument("--out")
a = p.parse_args()

AREAS = {
    "wide": ("hexgrid", {"rows": 4, "cols": 5, "spacing_m": 1.9, "jitter_m": 0.2}),
    "narrow": ("random", {"n_readers": 20, "width_m": 20, "height_m": 20}),
}
with csv_out(a.out, ["area", "seed", "ga_pairs", "random_by_fitness_pairs", "random_by_count_pairs"]) as w:
    for area, (kind, params) in AREAS.items():
        for s in range(a.seeds):
            w.writerow([area, s, *ga_vs_random(generate_scenario(kind, params, s), s, a.samples)])
