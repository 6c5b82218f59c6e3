from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trident_sim import netsim, rf
from trident_sim.assign import build_graph
from trident_sim.channel import FadingChain, measure_interference
from trident_sim.errors import ConfigError
from trident_sim.layout import corridor_scenario
from trident_sim.scenario import Reader, Scenario, SimConfig, Tag


def single(mode="trident", **sim):
    return Scenario((Reader("r", (0.0, 0.0)),), (Tag("t", (0.5, 0.0)),), sim=SimConfig(mode=mode, **sim))


@pytest.mark.parametrize("mode", ["trident", "tdma"])
def test_single_link_is_lossless(mode):
    res = netsim.run(single(mode))
    assert res.overall_throughput_bps == 400 * 128
    assert res.delivered.tolist() == [400] and res.collided.sum() == res.suppressed.sum() == 0


def _accounting(res):
    assert np.array_equal(res.delivered + res.collided + res.suppressed, res.offered)
    assert res.decoded_at.sum() == res.delivered.sum()
    assert res.overall_throughput_bps == pytest.approx(res.reader_throughput_bps.sum())


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.sampled_from(["trident", "tdma"]), st.integers(1, 9),
       st.sampled_from(["periodic", "poisson"]))
def test_packet_accounting(seed, mode, n_tags, arrival):
    sc = corridor_scenario(n_tags, seed=seed).with_sim(mode=mode, seed=seed, duration_s=0.2)
    _accounting(netsim.run(sc.with_traffic(arrival=arrival)))


@pytest.mark.parametrize("mode", ["trident", "tdma"])
def test_throughput_monotone_in_capture_threshold(mode):
    for seed in range(3):
        sc = corridor_scenario(7, seed=seed).with_sim(mode=mode, seed=seed, duration_s=0.3)
        # pin the scheduling threshold, which otherwise follows the capture margin
        sc = sc.with_sim(threshold_mw=netsim.interference_threshold_mw(sc))
        tp = [netsim.run(sc.with_sim(capture_threshold_db=c)).overall_throughput_bps for c in (3.0, 6.0, 10.0)]
        assert tp[0] >= tp[1] >= tp[2]


@pytest.mark.parametrize("mode", ["trident", "tdma"])
def test_tags_out_of_range_deliver_nothing(mode):
    sc = replace(single(mode), tags=(Tag("far", (60.0, 0.0)),))
    res = netsim.run(sc)
    assert res.overall_throughput_bps == 0
    _accounting(res)


def test_identical_seeds_identical_results():
    sc = corridor_scenario(7, seed=2).with_sim(seed=9, duration_s=0.3)
    for mode in ("trident", "tdma"):
        a, b = netsim.run(sc.with_sim(mode=mode)), netsim.run(sc.with_sim(mode=mode))
        for f in ("reader_throughput_bps", "delivered", "collided", "suppressed", "interference_energy"):
            assert np.array_equal(getattr(a, f), getattr(b, f))


def test_conflict_free_close_tags_deliver_everything():
    rd = tuple(Reader(f"r{i}", (5.0 * i, 0.0), band=i) for i in range(3))
    tags = tuple(Tag(f"t{i}", (5.0 * i, 0.5)) for i in range(3))
    res = netsim.run(Scenario(rd, tags))
    assert np.array_equal(res.delivered, res.offered)
    assert res.tag_home.tolist() == [0, 1, 2]


@settings(max_examples=40)
@given(st.integers(1, 12), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_greedy_slots_never_pair_neighbours(n, p, seed):
    rng = np.random.default_rng(seed)
    g = np.triu(rng.random((n, n)) < p, 1).astype(float)
    g = g + g.T
    groups = netsim.greedy_slots(g)
    assert sorted(i for grp in groups for i in grp) == list(range(n))
    for grp in groups:
        assert not g[np.ix_(grp, grp)].any()


def test_threshold_derivation_keeps_capture_margin():
    sc = single()
    c, r = sc.sim.capture_threshold_db, sc.sim.read_range_m
    # independent check: at the threshold separation D the worst-case victim
    # (tag at r from its reader, interferer at r from the other reader on the line)
    # sees exactly the capture margin
    d = r * (1 + 10 ** (c / 20))
    f = sc.measurement_frequency
    sig = -2 * rf.path_loss_db(r, f)
    intf = -rf.path_loss_db(r, f) - rf.path_loss_db(d - r, f)
    assert sig - intf == pytest.approx(c, abs=1e-9)
    p = 5 + 6 - rf.path_loss_db(d, f)
    assert netsim.interference_threshold_mw(sc) == pytest.approx(10 ** (p / 10))
    assert netsim.interference_threshold_mw(sc.with_sim(threshold_mw=1e-3)) == 1e-3


def test_fig8_tdma_uses_three_slot_groups(fig8):
    res = netsim.run(fig8.with_sim(mode="tdma"))
    m = measure_interference(fig8.readers, fig8.measurement_frequency)
    g = build_graph(m, netsim.interference_threshold_mw(fig8)).g
    assert len(res.slot_groups) == 3
    for grp in res.slot_groups:
        assert not g[np.ix_(grp, grp)].any()
    strict = netsim.run(fig8.with_sim(mode="tdma", tdma_strict=True))
    assert len(strict.slot_groups) == 4


def test_unassigned_readers_get_genetic_bands():
    rd = (Reader("a", (0.0, 0.0)), Reader("b", (1.5, 0.0)), Reader("c", (0.75, 1.3)))
    res = netsim.run(Scenario(rd, (Tag("t", (0.4, 0.0)),)))
    assert sorted(res.reader_bands.tolist()) == [0, 1, 2]


def test_sweep_basics():
    sc = corridor_scenario(4, seed=0).with_sim(duration_s=0.1)
    assert netsim.sweep(sc, "reporting_rate", []) == []
    with pytest.raises(ConfigError):
        netsim.sweep(sc, "voltage", [1.0])
    scs = netsim.sweep_scenarios(sc, "tag_count", [2, 6])
    assert [len(s.tags) for s in scs] == [2, 6] and scs[1].tags[:4] == sc.tags
    assert scs[0].seed != scs[1].seed
    common = netsim.sweep_scenarios(sc, "reporting_rate", [200, 300], seeds="common")
    assert {s.seed for s in common} == {sc.seed}
    assert [s.traffic.reporting_rate_pps for s in common] == [200, 300]
    left = netsim.sweep_scenarios(sc, "deployment", ["left"])[0]
    cx = np.mean([r.position[0] for r in sc.readers])
    assert all(t.position[0] < cx for t in left.tags)


def test_ablation_far_interferer_is_unaffected():
    rows = netsim.power_adjuster_ablation(single().with_sim(duration_s=0.3), [1.5])
    off, on = rows
    assert not off.interfering_excessive and not on.interfering_excessive
    assert (off.interfered_bps, off.interfering_bps) == (on.interfered_bps, on.interfering_bps)


def test_backscatter_selectivity_in_band_reference(fig8):
    p, bands = netsim.backscatter_selectivity(fig8)
    assert p.shape == (7, 4, 3)
    inband = p[:, np.arange(4), bands]
    assert np.all(inband[:, :, None] >= p - 1e-9)


def test_dynamic_identity_chain():
    rd = tuple(Reader(f"r{i}", (1.2 * i, 0.4 * (i % 2))) for i in range(6))
    sc = Scenario(rd, ())
    ga = replace(sc.ga, population_size=20, iterations=20)
    fr = netsim.dynamic_run(sc, FadingChain.identity(6), "frozen", 50, 0.9, ga)
    re = netsim.dynamic_run(sc, FadingChain.identity(6), "reallocate", 50, 0.9, ga)
    assert len(fr) == 50 and np.array_equal(fr, re) and np.all(fr == fr[0])


def test_dynamic_trace_length_and_validation():
    rd = tuple(Reader(f"r{i}", (1.0 * i, 0.0)) for i in range(4))
    sc = Scenario(rd, ())
    ga = replace(sc.ga, population_size=10, iterations=5)
    assert len(netsim.dynamic_run(sc, FadingChain(4, seed=1), "reallocate", 17, 0.9, ga)) == 17
    with pytest.raises(ConfigError):
        netsim.dynamic_run(sc, FadingChain(5), "frozen", 3)
    with pytest.raises(ConfigError):
        netsim.dynamic_run(sc, FadingChain(4), "greedy", 3)
