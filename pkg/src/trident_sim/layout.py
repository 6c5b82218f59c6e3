"""Reader/tag geometry: the corridor testbed, hexagonal and random reader
fields, tag placement inside reader coverage, and spacing rescaling."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .errors import ConfigError
from .scenario import Reader, Scenario, Tag

CORRIDOR_SIZE = (6.0, 4.0)  # x, y extent (m)
DEPLOYMENTS = ("uniform", "left", "front")
# Tags sit within this radius of a reader: half the densest reader spacing
# studied, so every tag keeps an unambiguous home reader.
TAG_COVERAGE_M = 0.7


def corridor_readers(spacing: float = 1.8, bands: tuple[int, ...] = (0, 1, 0, 2)) -> list[Reader]:
    """Four readers on a rhombus of two equilateral triangles around the corridor centre.

    Every reader pair is ``spacing`` apart except upper and lower, which sit
    ``spacing * sqrt(3)`` apart and share a band.
    """
    if spacing <= 0:
        raise ConfigError("reader spacing must be positive (m)", "spacing")
    a, b = spacing * math.sqrt(3.0) / 2, spacing / 2
    pos = [(0.0, a), (-b, 0.0), (0.0, -a), (b, 0.0)]
    names = ("upper", "left", "lower", "right")
    return [Reader(n, p, band=b) for n, p, b in zip(names, pos, bands)]


def in_region(x: float, y: float, deployment: str) -> bool:
    """Half-plane test relative to the deployment centre ("front" is y < 0)."""
    if deployment == "uniform":
        return True
    if deployment == "left":
        return x < 0
    if deployment == "front":
        return y < 0
    raise ConfigError(f"unknown deployment {deployment!r}; expected one of {DEPLOYMENTS}", "deployment")


def place_tags(readers, count: int, rng: np.random.Generator, coverage: float = 1.0,
               deployment: str = "uniform", bounds=None, prefix: str = "tag") -> list[Tag]:
    """Tags uniform over the union of reader coverage discs (rejection sampling),
    optionally restricted to half of the area (split at the reader centroid)
    and to ``bounds`` ((x0, y0), (x1, y1))."""
    if deployment not in DEPLOYMENTS:
        raise ConfigError(f"unknown deployment {deployment!r}; expected one of {DEPLOYMENTS}", "deployment")
    if count < 0 or coverage <= 0:
        raise ConfigError("tag count must be >= 0 and coverage positive (m)", "tags")
    pos = np.array([r.position for r in readers], float)
    cx, cy = pos.mean(axis=0)
    lo, hi = pos.min(axis=0) - coverage, pos.max(axis=0) + coverage
    if bounds is not None:
        lo, hi = np.maximum(lo, bounds[0]), np.minimum(hi, bounds[1])
    if np.any(hi <= lo):
        raise ConfigError("tag placement area is empty", "tags")
    tags = []
    for _ in range(10000 * max(count, 1)):
        if len(tags) == count:
            break
        x, y = rng.uniform(lo, hi)
        if np.min(np.hypot(pos[:, 0] - x, pos[:, 1] - y)) > coverage or not in_region(x - cx, y - cy, deployment):
            continue
        tags.append(Tag(f"{prefix}{len(tags)}", (float(x), float(y))))
    else:
        raise ConfigError("could not place tags inside the coverage area", "tags")
    return tags


def corridor_scenario(n_tags: int = 7, spacing: float = 1.8, seed: int = 0,
                      deployment: str = "uniform", coverage: float = TAG_COVERAGE_M, **scenario_kw) -> Scenario:
    readers = corridor_readers(spacing)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    half = np.array(CORRIDOR_SIZE) / 2
    tags = place_tags(readers, n_tags, rng, coverage, deployment, bounds=(-half, half))
    return Scenario(tuple(readers), tuple(tags), **scenario_kw)


def hexgrid_readers(rows: int, cols: int, spacing: float) -> list[Reader]:
    if rows < 1 or cols < 1 or spacing <= 0:
        raise ConfigError("hexgrid needs rows, cols >= 1 and positive spacing", "generate.hexgrid")
    out = []
    for r in range(rows):
        for c in range(cols):
            x = spacing * (c + 0.5 * (r % 2))
            y = spacing * r * math.sqrt(3.0) / 2
            out.append(Reader(f"r{len(out)}", (x, y)))
    return out


def hexgrid_coloring(rows: int, cols: int) -> list[int]:
    """Proper 3-colouring of the triangular lattice produced by ``hexgrid_readers``."""
    out = []
    for r in range(rows):
        for c in range(cols):
            # axial coordinates of an offset ("odd-r") lattice
            q = c - (r - (r & 1)) // 2
            out.append((q - r) % 3)
    return out


def random_readers(n: int, width: float, height: float, rng: np.random.Generator) -> list[Reader]:
    if n < 1 or width <= 0 or height <= 0:
        raise ConfigError("random layout needs n >= 1 and a positive area", "generate.random")
    xy = rng.uniform((0.0, 0.0), (width, height), size=(n, 2))
    return [Reader(f"r{i}", (float(x), float(y))) for i, (x, y) in enumerate(xy)]


def rescale_spacing(sc: Scenario, spacing: float) -> Scenario:
    """Scale reader positions about their centroid so the closest reader pair is
    ``spacing`` apart; each tag keeps its offset from its nearest reader."""
    pos = np.array([r.position for r in sc.readers], float)
    if len(pos) < 2:
        raise ConfigError("reader_spacing needs at least two readers", "reader_spacing")
    if spacing <= 0:
        raise ConfigError("reader spacing must be positive (m)", "reader_spacing")
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    d[np.diag_indices_from(d)] = np.inf
    k = spacing / d.min()
    center = pos.mean(axis=0)
    new = center + (pos - center) * k
    readers = tuple(replace(r, position=(float(x), float(y))) for r, (x, y) in zip(sc.readers, new))
    tags = []
    for t in sc.tags:
        tp = np.array(t.position)
        home = int(np.argmin(np.linalg.norm(pos - tp, axis=1)))
        x, y = new[home] + (tp - pos[home])
        tags.append(replace(t, position=(float(x), float(y))))
    return replace(sc, readers=readers, tags=tuple(tags))
