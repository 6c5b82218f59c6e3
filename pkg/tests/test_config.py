import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trident_sim import config, netsim
from trident_sim.assign import GaConfig, assign_genetic, assign_oracle, build_graph, conflict_pairs
from trident_sim.channel import measure_interference
from trident_sim.errors import ConfigError
from trident_sim.scenario import Reader, Scenario, SimConfig, Tag, Traffic
from trident_sim.tag import TagProfile

MINIMAL = """
[[readers]]
id = "r0"
position_m = [0, 0]

[[tags]]
id = "t0"
position_m = [0.5, 0]
"""


def test_minimal_file_gets_defaults(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text(MINIMAL)
    sc = config.parse_scenario(p)
    assert sc.readers == (Reader("r0", (0.0, 0.0)),) and sc.tags == (Tag("t0", (0.5, 0.0)),)
    assert sc.bands_hz == (700e6, 800e6, 900e6)
    assert sc.traffic == Traffic() and sc.sim == SimConfig()
    assert sc.ga == GaConfig()


def test_duplicate_reader_id():
    text = MINIMAL + '\n[[readers]]\nid = "r0"\nposition_m = [2, 0]\n'
    with pytest.raises(ConfigError, match="r0") as e:
        config.parse_scenario_text(text)
    assert e.value.path == "readers[1].id"


def test_fig8_preset(fig8):
    assert len(fig8.readers) == 4 and len(fig8.tags) == 7
    assert fig8.bands_hz == (700e6, 800e6, 900e6)
    assert config.parse_scenario_text('preset = "fig8"\n[sim]\nseed = 3\n').tags != fig8.tags


def test_parse_error_has_location():
    with pytest.raises(ConfigError, match=r"line 2, column \d+"):
        config.parse_scenario_text("[sim]\nseed = = 3\n")


@pytest.mark.parametrize("text, path", [
    ("[sim]\nspeed = 1\n", "sim.speed"),
    (MINIMAL + "[traffic]\nreporting_rate_pps = 9000\n", "traffic.reporting_rate_pps"),
    (MINIMAL + "[sim]\nmode = \"csma\"\n", "sim.mode"),
    (MINIMAL.replace("[0.5, 0]", "[0.5]"), "tags[0].position_m"),
    (MINIMAL + "[ga]\nbands = 4\n", "ga.bands"),
    ('bands_hz = [700e6, 710e6]\n' + MINIMAL, "bands_hz"),
    ('preset = "fig8"\n[layout]\nn_tag = 3\n', "layout.n_tag"),
])
def test_validation_paths(text, path):
    with pytest.raises(ConfigError) as e:
        config.parse_scenario_text(text)
    assert e.value.path == path


def _scenarios():
    pos = st.tuples(st.floats(-20, 20), st.floats(-20, 20))
    band = st.one_of(st.none(), st.integers(0, 2))
    reader = st.builds(Reader, st.just(""), pos, st.floats(-10, 10), st.floats(0, 6), band)
    prof = st.builds(TagProfile, power_adjuster=st.booleans(), detect_floor=st.floats(-60, -30))
    tag = st.builds(Tag, st.just(""), pos, st.floats(0, 6), st.one_of(st.just(TagProfile()), prof))
    return st.builds(
        lambda rs, ts, rate, seed, mode: Scenario(
            tuple(Reader(f"r{i}", r.position, r.tx_power_dbm, r.gain_dbi, r.band) for i, r in enumerate(rs)),
            tuple(Tag(f"t{i}", t.position, t.gain_dbi, t.profile) for i, t in enumerate(ts)),
            traffic=Traffic(reporting_rate_pps=rate), sim=SimConfig(seed=seed, mode=mode)),
        st.lists(reader, min_size=1, max_size=4), st.lists(tag, max_size=4), st.floats(1, 700),
        st.integers(0, 2**64 - 1), st.sampled_from(["trident", "tdma"]))


@settings(max_examples=60)
@given(_scenarios())
def test_round_trip(sc):
    text = config.emit_scenario(sc)
    back = config.parse_scenario_text(text)
    assert back == sc
    assert config.emit_scenario(back) == text


def test_round_trip_fig8(fig8):
    assert config.parse_scenario_text(config.emit_scenario(fig8)) == fig8


def test_matrix_round_trip_and_errors():
    m = np.random.default_rng(0).uniform(0, 1e-3, (5, 5))
    np.fill_diagonal(m, 0)
    back = config.read_matrix_text(config.matrix_to_text(m))
    assert np.array_equal(back.m, m)
    with pytest.raises(ConfigError) as e:
        config.read_matrix_text("n=2\n0,1\n1,x\n")
    assert e.value.path == "<matrix>:3:2"
    with pytest.raises(ConfigError):
        config.read_matrix_text("0,1\n1,0\n")


def test_generate_same_seed_same_bytes():
    for kind in ("hexgrid", "random", "corridor"):
        a = config.emit_scenario(config.generate_scenario(kind, {"n_tags": 4}, 5))
        assert a == config.emit_scenario(config.generate_scenario(kind, {"n_tags": "4"}, 5))
    assert config.emit_scenario(config.generate_scenario("random", {}, 1)) != config.emit_scenario(
        config.generate_scenario("random", {}, 2))


def test_generate_errors():
    with pytest.raises(ConfigError):
        config.generate_scenario("hexgrid", {"spacing_m": 2.5})
    with pytest.raises(ConfigError):
        config.generate_scenario("random", {"width_m": 0})
    with pytest.raises(ConfigError):
        config.generate_scenario("random", {"depth_m": 3})
    with pytest.raises(ConfigError):
        config.generate_scenario("ring")


@pytest.mark.parametrize("rows, cols", [(2, 3), (3, 3), (2, 4)])
def test_hexgrid_is_three_colourable(rows, cols):
    sc = config.generate_scenario("hexgrid", {"rows": rows, "cols": cols, "colored": True})
    m = measure_interference(sc.readers, sc.measurement_frequency)
    thr = netsim.interference_threshold_mw(sc)
    g = build_graph(m, thr)
    assert g.edges and conflict_pairs(g, [r.band for r in sc.readers]) == 0
    assert assign_oracle(m, thr)[1] == 0.0


def test_random_sparse_field_mostly_conflict_free():
    zeros = 0
    for seed in range(10):
        sc = config.generate_scenario("random", {"n_readers": 20, "width_m": 20, "height_m": 20}, seed)
        m = measure_interference(sc.readers, sc.measurement_frequency)
        thr = netsim.interference_threshold_mw(sc)
        res = assign_genetic(m, GaConfig(seed=seed), thr)
        zeros += conflict_pairs(build_graph(m, thr), res.assignment) == 0
    assert zeros > 5


def test_result_rows_reconcile(fig8):
    res = netsim.run(fig8.with_sim(duration_s=0.2))
    rows = config.result_rows(0, "none", "", fig8, res)
    per, total = rows[:-1], rows[-1]
    assert total[4] == "*" and len(per) == 4
    for col in (6, 7, 8):
        assert sum(int(r[col]) for r in per) <= int(total[col])
    assert sum(int(r[6]) for r in per) == int(total[6])
    assert float(total[5]) == pytest.approx(sum(float(r[5]) for r in per))


def test_append_only_store(tmp_path):
    p = tmp_path / "r.csv"
    config.append_rows(p, [["a"] * 9])
    config.append_rows(p, [["b"] * 9])
    lines = p.read_text().split("\n")
    assert lines[0] == ",".join(config.RESULT_COLUMNS) and lines[1:3] == [",".join("a" * 9), ",".join("b" * 9)]
    assert "\r" not in p.read_text()
    with pytest.raises(ConfigError):
        config.append_rows(p, [["1", "2"]], ("x", "y"))


def test_manifest_hash_checked(tmp_path):
    man = config.make_manifest("simulate", {}, 3, config.emit_scenario(config.parse_scenario_text(MINIMAL)))
    p = tmp_path / "m.json"
    config.write_manifest(p, man)
    assert config.read_manifest(p) == man
    man["scenario"] += "\n# edited\n"
    config.write_manifest(p, man)
    with pytest.raises(ConfigError, match="hash"):
        config.read_manifest(p)
