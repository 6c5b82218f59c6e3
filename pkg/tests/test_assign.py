import itertools
import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trident_sim.assign import (GaConfig, InterferenceMatrix, assign_genetic, assign_oracle, build_graph,
                                conflict_pairs, fitness_error, maybe_reallocate, random_search, similarity)
from trident_sim.errors import ConfigError, SizeError

K3 = np.ones((3, 3)) - np.eye(3)
K4 = np.ones((4, 4)) - np.eye(4)


def brute_error(w, f):
    # per-reader co-band sums, then mean + median, written without numpy tricks
    n = len(f)
    e = [sum(w[i][j] for j in range(n) if j != i and f[i] == f[j]) for i in range(n)]
    return sum(e) / n + statistics.median(e)


def brute_optimum(w, bands=3):
    return min(brute_error(w, f) for f in itertools.product(range(bands), repeat=len(w)))


def test_graph_thresholding():
    assert not build_graph(np.zeros((4, 4)), 0.0).edges
    m = np.zeros((4, 4))
    m[1, 3] = 2.0
    g = build_graph(m, 1.0)
    assert g.edges == [(1, 3)] and g.g[3, 1] == g.g[1, 3] == 2.0
    assert build_graph(K3 * 5, 1.0).edges == [(0, 1), (0, 2), (1, 2)]


def test_matrix_validation():
    with pytest.raises(ConfigError):
        InterferenceMatrix(np.ones((2, 3)))
    with pytest.raises(ConfigError):
        InterferenceMatrix(-K3)
    assert InterferenceMatrix(np.ones((3, 3))).m.trace() == 0


def test_fitness_examples():
    g = build_graph(K3, 0.0)
    assert fitness_error(g, [0, 1, 2]) == 0.0
    assert fitness_error(g, [0, 0, 0]) == 4.0
    assert conflict_pairs(g, [0, 1, 2]) == 0
    assert conflict_pairs(g, [0, 0, 0]) == 3
    assert fitness_error(build_graph(np.zeros((5, 5)), 0.0), [0, 0, 1, 2, 0]) == 0.0


def test_k4_needs_a_conflict():
    best, err = assign_oracle(K4, 0.0)
    assert err > 0 and err == pytest.approx(brute_optimum(K4.tolist()))
    assert conflict_pairs(build_graph(K4, 0.0), best) == 1
    assert assign_genetic(K4, GaConfig(), 0.0).error == pytest.approx(err)


def test_small_cases():
    assert assign_genetic(K3, GaConfig(), 0.0).error == 0.0
    one = assign_genetic(np.zeros((1, 1)), GaConfig(), 0.0)
    assert one.assignment.tolist() == [0] and one.error == 0.0
    assert assign_oracle(np.zeros((1, 1)), 0.0)[0].tolist() == [0]


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_oracle_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    w = np.triu(rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.6), 1)
    w = w + w.T
    _, err = assign_oracle(w, 0.0)
    assert err == pytest.approx(brute_optimum(w.tolist()), rel=1e-12, abs=1e-15)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_ga_never_beats_oracle(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0, 1, (n, n))
    _, err = assign_oracle(w, 0.0)
    res = assign_genetic(w, GaConfig(population_size=20, iterations=20, seed=seed), 0.0)
    assert res.error >= err - 1e-12
    assert res.error == pytest.approx(fitness_error(build_graph(w, 0.0), res.assignment))
    assert np.all(np.diff(res.history) <= 1e-12)


def test_ga_deterministic():
    w = np.random.default_rng(3).uniform(0, 1, (9, 9))
    a = assign_genetic(w, GaConfig(seed=5), 0.0)
    b = assign_genetic(w, GaConfig(seed=5), 0.0)
    assert a.assignment.tolist() == b.assignment.tolist() and a.history == b.history


def test_oracle_size_guard():
    with pytest.raises(SizeError):
        assign_oracle(np.zeros((16, 16)), 0.0)


def test_ga_config_validation():
    with pytest.raises(ConfigError):
        GaConfig(population_size=2)
    with pytest.raises(ConfigError):
        GaConfig(fitness="sum")


def test_random_search_rankings_share_samples():
    w = np.random.default_rng(1).uniform(0, 1, (10, 10))
    _, by_count = random_search(w, 0.3, 5000, seed=2)
    _, by_fitness = random_search(w, 0.3, 5000, seed=2, score="mean_median")
    assert by_count <= by_fitness


def test_similarity_examples():
    v = np.array([1.0, 2.0, 0.5])
    assert similarity(v, v) == pytest.approx(1.0)
    assert similarity(v, 2 * v) == pytest.approx(1.0)
    assert similarity([1, 0], [0, 1]) == 0.0
    assert similarity([0, 0], [0, 0]) == 1.0


def test_maybe_reallocate():
    assert maybe_reallocate([1, 0], [1, 0], 0.9, K3, GaConfig(), 0.0) is None
    f = maybe_reallocate([1, 0], [0, 1], 0.9, K3, GaConfig(), 0.0)
    assert sorted(f.tolist()) == [0, 1, 2]
    with pytest.raises(ConfigError):
        maybe_reallocate([1, 0], [1, 0], 0.0, K3, GaConfig(), 0.0)


weights = st.integers(2, 9).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.floats(0, 1), min_size=n, max_size=n), min_size=n, max_size=n),
    st.lists(st.integers(0, 2), min_size=n, max_size=n)))


@given(weights, st.permutations([0, 1, 2]), st.sampled_from(["mean_median", "max_median"]))
def test_fitness_zero_iff_no_conflicts_and_label_free(case, perm, fitness):
    w, f = case
    g = build_graph(np.array(w), 0.0)
    err = fitness_error(g, f, fitness)
    assert err >= 0 and (err == 0) == (conflict_pairs(g, f) == 0)
    assert fitness_error(g, [perm[b] for b in f], fitness) == pytest.approx(err)


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=8),
       st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_similarity_bounded_and_scale_free(pairs, a, b):
    u, v = np.array(pairs).T
    s = similarity(u, v)
    assert -1.0 <= s <= 1.0
    if np.linalg.norm(u) > 1e-6 and np.linalg.norm(v) > 1e-6:
        assert similarity(a * u, b * v) == pytest.approx(s, abs=1e-9)
