"""Scenario files (TOML with units in key names), scenario generators,
interference-matrix and result CSVs, and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from . import __version__
from .assign import GaConfig, InterferenceMatrix
from .errors import ConfigError, DomainError
from .layout import (TAG_COVERAGE_M, corridor_scenario, hexgrid_coloring, hexgrid_readers, place_tags,
                     random_readers)
from .scenario import ChannelConfig, Reader, Scenario, SimConfig, Tag, Traffic
from .tag import TagProfile

PRESETS = ("fig8",)
RESULT_COLUMNS = ("run_id", "mode", "param", "value", "reader_id", "throughput_bps", "delivered", "collided",
                  "suppressed")
ALL_READERS = "*"

# file key -> dataclass field, per table
_TRAFFIC = {"reporting_rate_pps": "reporting_rate_pps", "packet_bits": "packet_bits",
            "tag_bitrate_bps": "tag_bitrate_bps", "arrival": "arrival", "jitter": "jitter"}
_CHANNEL = {"states_db": "states_db", "transition": "transition", "initial_state": "initial_state",
            "reciprocal": "reciprocal", "burn_in_steps": "burn_in_steps", "ref_distance_m": "ref_distance_m",
            "tag_link_loss_db": "tag_link_loss_db", "static": "static"}
_GA = {"population_size": "population_size", "iterations": "iterations", "elite_fraction": "elite_fraction",
       "mutation_rate": "mutation_rate", "seed": "seed", "fitness": "fitness",
       "immigrant_fraction": "immigrant_fraction"}
_SIM = {"duration_s": "duration_s", "capture_threshold_db": "capture_threshold_db",
        "noise_floor_dbm": "noise_floor_dbm", "mode": "mode", "seed": "seed", "slot_s": "slot_s",
        "tdma_strict": "tdma_strict", "read_range_m": "read_range_m", "threshold_mw": "threshold_mw"}
_READER = {"id", "position_m", "tx_power_dbm", "gain_dbi", "band"}
_TAG = {"id", "position_m", "gain_dbi", "profile"}
_PROFILE = {"inductor_ohm": "inductor", "capacitor_ohm": "capacitor", "series_lr_ohm": "series_lr",
            "z0_ohm": "z0", "detect_floor_dbm": "detect_floor", "power_threshold_dbm": "power_threshold",
            "compare_resolution_db": "compare_resolution", "oob_residual_db": "oob_residual",
            "power_adjuster": "power_adjuster"}
_FILTER = {"passband_halfwidth_hz": "passband_halfwidth", "insertion_loss_db": "insertion_loss",
           "oob_suppression_db": "oob_suppression", "skirt_width_hz": "skirt_width"}
_LAYOUT = {"n_tags", "spacing_m", "deployment", "coverage_m"}
_TOP = {"preset", "layout", "bands_hz", "readers", "tags", "traffic", "channel", "ga", "sim"}

_INT_FIELDS = {"packet_bits", "initial_state", "burn_in_steps", "population_size", "iterations", "seed", "band"}
_BOOL_FIELDS = {"reciprocal", "static", "tdma_strict", "power_adjuster"}
_STR_FIELDS = {"arrival", "fitness", "mode", "id", "preset", "deployment"}


# ---------------------------------------------------------------- parsing

def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read scenario file: {e.strerror}", str(path)) from e
    return parse_scenario_text(text, source=str(path))


def parse_scenario_text(text: str, source: str = "<scenario>") -> Scenario:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"parse error: {e}", source) from e
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    _reject_unknown(doc, _TOP, "")
    sim = _build(SimConfig, doc.get("sim", {}), _SIM, "sim")
    traffic = _build(Traffic, doc.get("traffic", {}), _TRAFFIC, "traffic")
    channel = _build(ChannelConfig, doc.get("channel", {}), _CHANNEL, "channel")
    if "states_db" in doc.get("channel", {}):
        channel = replace(channel, states_db=tuple(float(x) for x in channel.states_db))
    if "transition" in doc.get("channel", {}):
        channel = replace(channel, transition=tuple(tuple(float(x) for x in row) for row in channel.transition))
    bands = tuple(float(b) for b in _get(doc, "bands_hz", list, "bands_hz", (700e6, 800e6, 900e6)))
    ga_doc = doc.get("ga", {})
    if isinstance(ga_doc, dict) and "bands" in ga_doc:
        raise ConfigError("the band count follows bands_hz and cannot be set here", "ga.bands")
    ga = _build(GaConfig, {**ga_doc, "bands": len(bands)}, {**_GA, "bands": "bands"}, "ga")

    preset = doc.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {PRESETS}", "preset")
        if "readers" in doc or "tags" in doc:
            raise ConfigError("a preset supplies readers and tags; remove the explicit lists", "preset")
        lay = doc.get("layout", {})
        _reject_unknown(lay, _LAYOUT, "layout")
        base = corridor_scenario(
            n_tags=_get(lay, "n_tags", int, "layout.n_tags", 7),
            spacing=_get(lay, "spacing_m", float, "layout.spacing_m", 1.8),
            seed=sim.seed,
            deployment=_get(lay, "deployment", str, "layout.deployment", "uniform"),
            coverage=_get(lay, "coverage_m", float, "layout.coverage_m", TAG_COVERAGE_M),
        )
        readers, tags = base.readers, base.tags
    else:
        if "layout" in doc:
            raise ConfigError("[layout] only applies together with a preset", "layout")
        readers = tuple(_reader(r, i) for i, r in enumerate(_get(doc, "readers", list, "readers", [])))
        tags = tuple(_tag(t, i) for i, t in enumerate(_get(doc, "tags", list, "tags", [])))
    return Scenario(readers, tags, bands, traffic, channel, ga, sim).validate()


def _reject_unknown(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError("expected a table", where or "<root>")
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r}", f"{where}.{k}" if where else k)


def _coerce(value, name, path):
    if name in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ConfigError("expected true or false", path)
        return value
    if name in _STR_FIELDS:
        if not isinstance(value, str):
            raise ConfigError("expected a string", path)
        return value
    if isinstance(value, bool):
        raise ConfigError("expected a number, got a boolean", path)
    if name in _INT_FIELDS:
        if not isinstance(value, int):
            raise ConfigError("expected an integer", path)
        return value
    if isinstance(value, (int, float)):
        v = float(value)
        if not math.isfinite(v):
            raise ConfigError("expected a finite number", path)
        return v
    return value


def _get(d, key, typ, path, default):
    if key not in d:
        return default
    v = d[key]
    if typ is list:
        if not isinstance(v, list):
            raise ConfigError("expected an array", path)
        return v
    if typ is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError("expected a finite number", path)
        return float(v)
    if typ is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError("expected an integer", path)
        return v
    if not isinstance(v, typ):
        raise ConfigError(f"expected {typ.__name__}", path)
    return v


def _build(cls, d, mapping, where):
    _reject_unknown(d, mapping, where)
    kw = {mapping[k]: _coerce(v, mapping[k], f"{where}.{k}") for k, v in d.items()}
    try:
        return cls(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), where) from e


def _position(v, path):
    if not isinstance(v, list) or len(v) != 2 or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigError("expected [x, y] in metres", path)
    return (float(v[0]), float(v[1]))


def _reader(d, i):
    where = f"readers[{i}]"
    _reject_unknown(d, _READER, where)
    for k in ("id", "position_m"):
        if k not in d:
            raise ConfigError("missing required key", f"{where}.{k}")
    return Reader(
        id=_coerce(d["id"], "id", f"{where}.id"),
        position=_position(d["position_m"], f"{where}.position_m"),
        tx_power_dbm=_get(d, "tx_power_dbm", float, f"{where}.tx_power_dbm", 5.0),
        gain_dbi=_get(d, "gain_dbi", float, f"{where}.gain_dbi", 3.0),
        band=_get(d, "band", int, f"{where}.band", None),
    )


def _tag(d, i):
    where = f"tags[{i}]"
    _reject_unknown(d, _TAG, where)
    for k in ("id", "position_m"):
        if k not in d:
            raise ConfigError("missing required key", f"{where}.{k}")
    prof = _profile(d.get("profile", {}), f"{where}.profile")
    return Tag(
        id=_coerce(d["id"], "id", f"{where}.id"),
        position=_position(d["position_m"], f"{where}.position_m"),
        gain_dbi=_get(d, "gain_dbi", float, f"{where}.gain_dbi", 3.0),
        profile=prof,
    )


def _impedance(v, path):
    if not isinstance(v, list) or len(v) != 2 or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigError("expected [resistance, reactance] in ohms", path)
    return complex(float(v[0]), float(v[1]))


def _profile(d, where):
    _reject_unknown(d, {**_PROFILE, **_FILTER}, where)
    kw, fkw = {}, {}
    for k, v in d.items():
        path = f"{where}.{k}"
        if k in _FILTER:
            fkw[_FILTER[k]] = _coerce(v, _FILTER[k], path)
        elif k.endswith("_ohm") and k != "z0_ohm":
            kw[_PROFILE[k]] = _impedance(v, path)
        else:
            kw[_PROFILE[k]] = _coerce(v, _PROFILE[k], path)
    try:
        filt = replace(TagProfile().filter, **fkw)
        return TagProfile(**kw, filter=filt)
    except ConfigError:
        raise
    except (DomainError, TypeError, ValueError) as e:
        raise ConfigError(str(e), where) from e


# ---------------------------------------------------------------- emitting

def scenario_to_dict(sc: Scenario) -> dict:
    """Fully explicit document: every default is written out."""
    doc = {"bands_hz": [float(b) for b in sc.bands_hz]}
    doc["readers"] = []
    for r in sc.readers:
        d = {"id": r.id, "position_m": [float(r.position[0]), float(r.position[1])],
             "tx_power_dbm": float(r.tx_power_dbm), "gain_dbi": float(r.gain_dbi)}
        if r.band is not None:
            d["band"] = int(r.band)
        doc["readers"].append(d)
    doc["tags"] = []
    for t in sc.tags:
        d = {"id": t.id, "position_m": [float(t.position[0]), float(t.position[1])], "gain_dbi": float(t.gain_dbi)}
        if t.profile != TagProfile():
            d["profile"] = _profile_dict(t.profile)
        doc["tags"].append(d)
    doc["traffic"] = _table(sc.traffic, _TRAFFIC)
    ch = _table(sc.channel, _CHANNEL)
    ch["states_db"] = [float(x) for x in sc.channel.states_db]
    ch["transition"] = [[float(x) for x in row] for row in sc.channel.transition]
    doc["channel"] = ch
    doc["ga"] = _table(sc.ga, _GA)
    doc["sim"] = _table(sc.sim, _SIM)
    return doc


def _table(obj, mapping):
    out = {}
    for key, name in mapping.items():
        v = getattr(obj, name)
        if v is None:
            continue
        if isinstance(v, float) or (isinstance(v, int) and not isinstance(v, bool) and name not in _INT_FIELDS):
            v = float(v)
        out[key] = v
    return out


def _profile_dict(p: TagProfile) -> dict:
    d = {}
    for key, name in _PROFILE.items():
        v = getattr(p, name)
        d[key] = [v.real, v.imag] if isinstance(v, complex) else (v if isinstance(v, bool) else float(v))
    for key, name in _FILTER.items():
        v = getattr(p.filter, name)
        if v is not None:
            d[key] = float(v)
    return d


def emit_scenario(sc: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(sc))


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------- generation

def generate_scenario(kind: str, params: dict | None = None, seed: int = 0) -> Scenario:
    """hexgrid: rows, cols, spacing_m, jitter_m, n_tags, colored; random: n_readers,
    width_m, height_m, n_tags; corridor: n_tags, spacing_m, deployment."""
    params = dict(params or {})
    sim = SimConfig(seed=seed)

    def take(key, typ, default):
        v = params.pop(key, default)
        try:
            return typ(v)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"expected {typ.__name__}, got {v!r}", f"generate.{key}") from e

    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    if kind == "hexgrid":
        rows, cols = take("rows", int, 3), take("cols", int, 3)
        spacing = take("spacing_m", float, 1.8)
        n_tags = take("n_tags", int, 0)
        jitter = take("jitter_m", float, 0.0)
        colored = take("colored", _as_bool, False)
        if spacing >= 2 * sim.read_range_m:
            raise ConfigError(f"spacing must stay below twice the read range ({2 * sim.read_range_m} m)",
                              "generate.spacing_m")
        if jitter < 0:
            raise ConfigError("jitter must be non-negative (m)", "generate.jitter_m")
        readers = hexgrid_readers(rows, cols, spacing)
        if jitter:
            # uniform offset per reader inside a square of half-width jitter_m
            xy = np.array([r.position for r in readers]) + rng.uniform(-jitter, jitter, (len(readers), 2))
            readers = [replace(r, position=(float(x), float(y))) for r, (x, y) in zip(readers, xy)]
        if colored:
            readers = [replace(r, band=b) for r, b in zip(readers, hexgrid_coloring(rows, cols))]
    elif kind == "random":
        n = take("n_readers", int, 20)
        w, h = take("width_m", float, 10.0), take("height_m", float, 10.0)
        n_tags = take("n_tags", int, 0)
        readers = random_readers(n, w, h, rng)
    elif kind == "corridor":
        n_tags = take("n_tags", int, 7)
        spacing = take("spacing_m", float, 1.8)
        deployment = take("deployment", str, "uniform")
        sc = corridor_scenario(n_tags, spacing, seed, deployment, sim=sim)
        _no_leftovers(params)
        return sc.validate()
    else:
        raise ConfigError(f"unknown kind {kind!r}; expected hexgrid, random or corridor", "generate.kind")
    _no_leftovers(params)
    if n_tags < 0:
        raise ConfigError("n_tags must be >= 0", "generate.n_tags")
    tags = place_tags(readers, n_tags, rng, TAG_COVERAGE_M) if n_tags else []
    return Scenario(tuple(readers), tuple(tags), sim=sim).validate()


def _as_bool(v):
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes"):
        return True
    if str(v).lower() in ("0", "false", "no"):
        return False
    raise ValueError(v)


def _no_leftovers(params):
    if params:
        k = sorted(params)[0]
        raise ConfigError(f"unknown parameter {k!r}", f"generate.{k}")


# ---------------------------------------------------------------- matrices

def read_matrix_text(text: str, source: str = "<matrix>") -> InterferenceMatrix:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise ConfigError("first line must be 'n=<count>'", f"{source}:1")
    try:
        n = int(lines[0][2:])
    except ValueError as e:
        raise ConfigError("reader count is not an integer", f"{source}:1") from e
    if n < 1:
        raise ConfigError("reader count must be >= 1", f"{source}:1")
    rows = lines[1:]
    if len(rows) != n:
        raise ConfigError(f"expected {n} matrix rows, found {len(rows)}", source)
    m = np.empty((n, n))
    for i, row in enumerate(rows):
        cells = row.split(",")
        if len(cells) != n:
            raise ConfigError(f"expected {n} values, found {len(cells)}", f"{source}:{i + 2}")
        for j, c in enumerate(cells):
            try:
                m[i, j] = float(c)
            except ValueError as e:
                raise ConfigError(f"not a number: {c.strip()!r}", f"{source}:{i + 2}:{j + 1}") from e
    return InterferenceMatrix(m)


def read_matrix_csv(path) -> InterferenceMatrix:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read matrix file: {e.strerror}", str(path)) from e
    return read_matrix_text(text, str(path))


def matrix_to_text(m: InterferenceMatrix | np.ndarray) -> str:
    a = m.m if isinstance(m, InterferenceMatrix) else np.asarray(m, float)
    lines = [f"n={a.shape[0]}"] + [",".join(repr(float(x)) for x in row) for row in a]
    return "\n".join(lines) + "\n"


def write_matrix_csv(path, m) -> None:
    Path(path).write_text(matrix_to_text(m), encoding="utf-8", newline="")


# ---------------------------------------------------------------- results

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def result_rows(run_id, param, value, sc: Scenario, res) -> list[list[str]]:
    """One row per reader plus an all-reader row ("*") with the tag-level totals.

    Per-reader delivered counts packets decoded at that reader; collided and
    suppressed are charged to each tag's home reader.
    """
    rows = []
    home = res.tag_home
    for j, rid in enumerate(res.reader_ids):
        mine = home == j
        decoded = int(res.decoded_at[j])
        rows.append([run_id, res.mode, param, value, rid, res.reader_throughput_bps[j], decoded,
                     int(res.collided[mine].sum()), int(res.suppressed[mine].sum())])
    rows.append([run_id, res.mode, param, value, ALL_READERS, res.overall_throughput_bps, int(res.delivered.sum()),
                 int(res.collided.sum()), int(res.suppressed.sum())])
    return [[_fmt(x) for x in r] for r in rows]


def rows_to_csv(rows, header=RESULT_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def append_rows(path, rows, header=RESULT_COLUMNS) -> None:
    """Append to a CSV store, writing the header only when the file is new."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    if not fresh:
        with path.open(encoding="utf-8", newline="") as fh:
            first = fh.readline().rstrip("\n")
        if first != ",".join(header):
            raise ConfigError("existing file has a different header", str(path))
    with path.open("a", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows, header if fresh else None))


# ---------------------------------------------------------------- manifests

def make_manifest(command: str, args: dict, seed: int, scenario_text: str | None = None,
                  inputs: dict | None = None) -> dict:
    body = scenario_text if scenario_text is not None else json.dumps(inputs or {}, sort_keys=True)
    return {
        "command": command,
        "args": args,
        "seed": int(seed),
        "code_version": __version__,
        "config_hash": config_hash(body),
        "scenario": scenario_text,
        "inputs": inputs or {},
    }


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="")


def read_manifest(path) -> dict:
    path = Path(path)
    try:
        man = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read manifest: {e.strerror}", str(path)) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"manifest is not valid JSON: {e}", str(path)) from e
    for k in ("command", "args", "seed", "config_hash"):
        if k not in man:
            raise ConfigError("missing required key", f"manifest.{k}")
    body = man.get("scenario")
    if body is None:
        body = json.dumps(man.get("inputs", {}), sort_keys=True)
    if config_hash(body) != man["config_hash"]:
        raise ConfigError("config hash does not match the embedded configuration", "manifest.config_hash")
    return man
