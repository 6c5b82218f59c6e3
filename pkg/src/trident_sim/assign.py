"""Reader frequency assignment on a thresholded interference graph.

A genetic search (elitist, uniform crossover, per-gene resampling, plus a
share of fresh random immigrants each generation) minimises ``mean(E) +
median(E)`` where ``E[j]`` is the co-band interference collected by reader
``j``. ``assign_oracle`` enumerates every assignment for small networks
and serves as ground truth for the heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, SizeError

ORACLE_LIMIT = 2**24


@dataclass(frozen=True)
class InterferenceMatrix:
    """``m[i, j]``: power (mW) reader ``j`` receives while reader ``i`` transmits."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError(f"interference matrix must be square, got shape {m.shape}", "matrix")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ConfigError("interference matrix entries must be finite and non-negative", "matrix")
        m = m.copy()
        np.fill_diagonal(m, 0.0)
        object.__setattr__(self, "m", m)

    @property
    def n(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class InterferenceGraph:
    g: np.ndarray
    threshold: float

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.g, 1))
        return list(zip(i.tolist(), j.tolist()))


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 200
    iterations: int = 300
    elite_fraction: float = 0.10
    mutation_rate: float | None = None  # None -> 1/n
    bands: int = 3
    seed: int = 0
    fitness: str = "mean_median"  # or "max_median"
    immigrant_fraction: float = 0.2  # share of each refill drawn fresh at random

    def __post_init__(self):
        if not 0 < self.elite_fraction <= 1:
            raise ConfigError("elite_fraction must lie in (0, 1]", "ga.elite_fraction")
        if self.population_size < 10:
            raise ConfigError("population_size must be >= 10", "ga.population_size")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1", "ga.iterations")
        if self.bands < 1:
            raise ConfigError("bands must be >= 1", "ga.bands")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ConfigError("mutation_rate must lie in [0, 1]", "ga.mutation_rate")
        if not 0 <= self.immigrant_fraction < 1:
            raise ConfigError("immigrant_fraction must lie in [0, 1)", "ga.immigrant_fraction")
        if self.fitness not in ("mean_median", "max_median"):
            raise ConfigError(f"unknown fitness {self.fitness!r}", "ga.fitness")


class GaResult(NamedTuple):
    assignment: np.ndarray
    error: float
    history: list[float]


def build_graph(m: InterferenceMatrix | np.ndarray, threshold: float) -> InterferenceGraph:
    """Symmetrise with max() and keep only entries strictly above ``threshold``."""
    if not isinstance(m, InterferenceMatrix):
        m = InterferenceMatrix(m)
    if threshold < 0:
        raise ConfigError("threshold must be non-negative", "threshold")
    sym = np.maximum(m.m, m.m.T)
    return InterferenceGraph(np.where(sym > threshold, sym, 0.0), float(threshold))


def node_strength(g: np.ndarray, pop: np.ndarray) -> np.ndarray:
    """Co-band interference per reader for a batch of assignments (P, n) -> (P, n)."""
    same = pop[:, :, None] == pop[:, None, :]
    return (same * g[None, :, :]).sum(axis=2)


def batch_error(g: np.ndarray, pop: np.ndarray, fitness: str = "mean_median") -> np.ndarray:
    e = node_strength(g, np.atleast_2d(pop))
    head = e.max(axis=1) if fitness == "max_median" else e.mean(axis=1)
    return head + np.median(e, axis=1)


def fitness_error(g: InterferenceGraph, f, fitness: str = "mean_median") -> float:
    f = np.asarray(f)
    if f.shape != (g.n,):
        raise ConfigError(f"assignment length {f.shape} does not match {g.n} readers", "assignment")
    return float(batch_error(g.g, f[None, :], fitness)[0])


def conflict_pairs(g: InterferenceGraph, f) -> int:
    f = np.asarray(f)
    same = f[:, None] == f[None, :]
    return int(np.count_nonzero(np.triu((g.g > 0) & same, 1)))


def _rank(pop: np.ndarray, err: np.ndarray) -> np.ndarray:
    # Sort by (error, genes) so ties resolve independently of evaluation order.
    keys = [pop[:, c] for c in range(pop.shape[1] - 1, -1, -1)] + [err]
    return np.lexsort(keys)


def assign_genetic(m: InterferenceMatrix | np.ndarray, cfg: GaConfig, threshold: float) -> GaResult:
    g = build_graph(m, threshold)
    n, bands = g.n, cfg.bands
    rng = np.random.default_rng(cfg.seed)
    if n == 0:
        return GaResult(np.zeros(0, dtype=np.int64), 0.0, [0.0] * cfg.iterations)

    size = cfg.population_size
    n_elite = max(1, math.ceil(cfg.elite_fraction * size))
    mut = 1.0 / n if cfg.mutation_rate is None else cfg.mutation_rate

    pop = rng.integers(0, bands, size=(size, n))
    history = []
    for _ in range(cfg.iterations):
        err = batch_error(g.g, pop, cfg.fitness)
        order = _rank(pop, err)
        # Drop duplicate genomes so the elite keeps some diversity.
        ranked = pop[order]
        keep = np.ones(size, dtype=bool)
        keep[1:] = np.any(ranked[1:] != ranked[:-1], axis=1)
        elite = ranked[keep][:n_elite]
        history.append(float(batch_error(g.g, elite[:1], cfg.fitness)[0]))

        n_fresh = int(cfg.immigrant_fraction * (size - len(elite)))
        n_child = size - len(elite) - n_fresh
        pa = elite[rng.integers(0, len(elite), n_child)]
        pb = elite[rng.integers(0, len(elite), n_child)]
        child = np.where(rng.random((n_child, n)) < 0.5, pa, pb)
        flip = rng.random((n_child, n)) < mut
        child = np.where(flip, rng.integers(0, bands, size=(n_child, n)), child)
        fresh = rng.integers(0, bands, size=(n_fresh, n))
        pop = np.concatenate([elite, child, fresh])

    err = batch_error(g.g, pop, cfg.fitness)
    best = _rank(pop, err)[0]
    return GaResult(pop[best].copy(), float(err[best]), history)


def enumerate_assignments(n: int, bands: int, start: int, stop: int) -> np.ndarray:
    """Assignments with lexicographic ranks in [start, stop); reader 0 is the most significant digit."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int64)
    for col in range(n - 1, -1, -1):
        out[:, col] = idx % bands
        idx //= bands
    return out


def assign_oracle(m: InterferenceMatrix | np.ndarray, threshold: float, bands: int = 3,
                  fitness: str = "mean_median", chunk: int = 1 << 15) -> tuple[np.ndarray, float]:
    """Exact minimum by enumeration; ties go to the lexicographically smallest assignment."""
    g = build_graph(m, threshold)
    n = g.n
    total = bands**n
    if total > ORACLE_LIMIT:
        raise SizeError(f"{bands}^{n} = {total} assignments exceeds the oracle limit {ORACLE_LIMIT}")
    best_err, best = math.inf, None
    for start in range(0, total, chunk):
        cand = enumerate_assignments(n, bands, start, min(total, start + chunk))
        err = batch_error(g.g, cand, fitness)
        k = int(np.argmin(err))
        if err[k] < best_err:
            best_err, best = float(err[k]), cand[k].copy()
    return best, best_err


def random_search(m: InterferenceMatrix | np.ndarray, threshold: float, samples: int, bands: int = 3,
                  seed: int = 0, score: str = "conflicts", chunk: int = 1 << 14) -> tuple[np.ndarray, int]:
    """Best of ``samples`` uniformly random assignments.

    ``score`` picks the ranking: ``"conflicts"`` (same-band adjacent pairs) or a
    fitness name, which ranks by the same error the genetic search minimises.
    Returns the winner and its conflict-pair count.
    """
    if score not in ("conflicts", "mean_median", "max_median"):
        raise ConfigError(f"unknown score {score!r}", "score")
    g = build_graph(m, threshold)
    rng = np.random.default_rng(seed)
    adj = np.triu(g.g > 0, 1)
    best_s, best = math.inf, None
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        cand = rng.integers(0, bands, size=(k, g.n))
        if score == "conflicts":
            same = cand[:, :, None] == cand[:, None, :]
            s = (same & adj[None]).sum(axis=(1, 2))
        else:
            s = batch_error(g.g, cand, score)
        i = int(np.argmin(s))
        if s[i] < best_s:
            best_s, best = float(s[i]), cand[i].copy()
        done += k
    return best, conflict_pairs(g, best)


def similarity(v0, vi) -> float:
    """Normalised dot product. Two zero vectors count as identical; one zero vector as orthogonal."""
    a, b = np.ravel(np.asarray(v0, dtype=float)), np.ravel(np.asarray(vi, dtype=float))
    if a.shape != b.shape:
        raise ConfigError(f"vector length mismatch {a.shape} vs {b.shape}", "interference_vector")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def maybe_reallocate(v0, vi, tau: float, m_current: InterferenceMatrix | np.ndarray, cfg: GaConfig,
                     threshold: float) -> np.ndarray | None:
    """Re-run the assignment when the observed interference pattern has drifted."""
    if not 0 < tau <= 1:
        raise ConfigError("tau must lie in (0, 1]", "tau")
    if similarity(v0, vi) >= tau:
        return None
    return assign_genetic(m_current, cfg, threshold).assignment
