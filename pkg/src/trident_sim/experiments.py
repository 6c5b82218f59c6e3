"""Placement-averaged experiment drivers shared by the scripts and acceptance tests."""

from __future__ import annotations

import numpy as np

from . import netsim
from .assign import GaConfig, assign_genetic, build_graph, conflict_pairs, random_search
from .channel import FadingChain, measure_interference
from .layout import corridor_scenario, random_readers
from .scenario import Scenario

MODES = ("trident", "tdma")


def corridor(n_tags: int, seed: int) -> Scenario:
    """Corridor testbed with tags drawn from ``seed``, which also seeds the run."""
    return corridor_scenario(n_tags, seed=seed).with_sim(seed=seed)


def placement_sweep(parameter: str, values, n_tags: int, placements: int, seeds: str = "common") -> np.ndarray:
    """Overall throughput (bps) per placement, value and mode: shape (placements, len(values), 2)."""
    out = np.zeros((placements, len(values), len(MODES)))
    for s in range(placements):
        for k, mode in enumerate(MODES):
            base = corridor(n_tags, s).with_sim(mode=mode)
            for i, res in enumerate(netsim.sweep(base, parameter, values, seeds=seeds)):
                out[s, i, k] = res.overall_throughput_bps
    return out


def ga_vs_random(sc: Scenario, seed: int, samples: int = 200_000) -> tuple[int, int, int]:
    """Conflict pairs of (GA, best random by fitness, best random by pair count)."""
    m = measure_interference(sc.readers, sc.measurement_frequency, ref_distance=sc.channel.ref_distance_m)
    thr = netsim.interference_threshold_mw(sc)
    g = build_graph(m, thr)
    ga = conflict_pairs(g, assign_genetic(m, GaConfig(seed=seed), thr).assignment)
    _, by_fit = random_search(m, thr, samples, seed=seed, score="mean_median")
    _, by_count = random_search(m, thr, samples, seed=seed, score="conflicts")
    return ga, by_fit, by_count


def dynamic_field(n_readers: int = 12, size_m: float = 6.0, seed: int = 0) -> Scenario:
    """Readers scattered uniformly over a square, no tags: the fading study field."""
    return Scenario(tuple(random_readers(n_readers, size_m, size_m, np.random.default_rng(seed))), ())


def dynamic_traces(sc: Scenario, epochs: int, tau: float = 0.9, chain_seed: int = 1,
                   ga: GaConfig | None = None) -> dict[str, np.ndarray]:
    """Frozen and reallocating traces driven by identical fading realisations."""
    ga = ga or GaConfig(population_size=40, iterations=40)
    n = len(sc.readers)
    return {p: netsim.dynamic_run(sc, FadingChain(n, seed=chain_seed), p, epochs, tau, ga)
            for p in ("frozen", "reallocate")}
