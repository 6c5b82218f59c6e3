"""Command-line entry points.

Every command that writes a CSV also writes ``<out>.manifest.json`` holding
the fully resolved inputs; ``replay`` re-executes a manifest.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import config, netsim
from .assign import GaConfig, assign_genetic, assign_oracle, build_graph, conflict_pairs
from .errors import ConfigError, DomainError

SEED_ENV = "TRIDENT_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _seed(value) -> int | None:
    """--seed, else $TRIDENT_SEED, else None (caller's default)."""
    if value is None:
        value = os.environ.get(SEED_ENV)
    if value is None:
        return None
    try:
        s = int(value)
    except ValueError as e:
        raise ConfigError(f"seed must be an integer, got {value!r}", "--seed") from e
    if not 0 <= s < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "--seed")
    return s


def _values(text: str) -> list[str]:
    vals = [v.strip() for v in text.split(",") if v.strip()]
    return vals


def _parse_value(parameter: str, v: str):
    try:
        if parameter == "tag_count":
            return int(v)
        if parameter == "deployment":
            return v
        return float(v)
    except ValueError as e:
        raise ConfigError(f"bad value {v!r} for {parameter}", "--values") from e


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="trident", description="Frequency-space division backscatter network tools.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", default=None,
                        help=f"u64 seed (default: ${SEED_ENV}, then the scenario's sim.seed, then 0)")

    a = sub.add_parser("assign", help="genetic frequency assignment for an interference matrix")
    a.add_argument("--matrix", required=True)
    a.add_argument("--bands", type=int, default=3)
    a.add_argument("--threshold-mw", type=float, default=0.0)
    a.add_argument("--population", type=int, default=GaConfig.population_size)
    a.add_argument("--iterations", type=int, default=GaConfig.iterations)
    a.add_argument("--fitness", choices=("mean_median", "max_median"), default="mean_median")
    a.add_argument("--out", help="CSV reader_id,band (default: stdout)")
    common(a)

    o = sub.add_parser("oracle", help="exhaustive optimal assignment (small matrices)")
    o.add_argument("--matrix", required=True)
    o.add_argument("--bands", type=int, default=3)
    o.add_argument("--threshold-mw", type=float, default=0.0)
    o.add_argument("--fitness", choices=("mean_median", "max_median"), default="mean_median")
    o.add_argument("--out")
    common(o)

    s = sub.add_parser("simulate", help="run one scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=("trident", "tdma"))
    s.add_argument("--static-channel", action="store_true")
    common(s)

    w = sub.add_parser("sweep", help="run a scenario across parameter values")
    w.add_argument("--scenario", required=True)
    w.add_argument("--param", required=True, choices=netsim.SWEEP_PARAMETERS)
    w.add_argument("--values", required=True, help="comma-separated values")
    w.add_argument("--out", required=True)
    w.add_argument("--mode", choices=("trident", "tdma"))
    w.add_argument("--seeds", choices=("derived", "common"), default="derived")
    w.add_argument("--static-channel", action="store_true")
    common(w)

    d = sub.add_parser("dynamic", help="co-band interference under Markov fading")
    d.add_argument("--scenario", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--epochs", type=int, default=1000)
    d.add_argument("--tau", type=float, default=0.9)
    d.add_argument("--population", type=int, default=40)
    d.add_argument("--iterations", type=int, default=40)
    common(d)

    g = sub.add_parser("generate", help="write a generated scenario file")
    g.add_argument("--kind", required=True, choices=("hexgrid", "random", "corridor"))
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    g.add_argument("--out", required=True)
    common(g)

    r = sub.add_parser("replay", help="re-run a manifest")
    r.add_argument("--manifest", required=True)
    r.add_argument("--out", required=True)
    return p


# ---------------------------------------------------------------- commands

def _write_out(out, text):
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _manifest_path(out):
    return f"{out}.manifest.json"


def run_assign(matrix_text: str, bands: int, threshold: float, population: int, iterations: int, fitness: str,
               seed: int, out: str | None, stdout) -> None:
    m = config.read_matrix_text(matrix_text)
    cfg = GaConfig(population_size=population, iterations=iterations, bands=bands, seed=seed, fitness=fitness)
    res = assign_genetic(m, cfg, threshold)
    g = build_graph(m, threshold)
    _emit_assignment(res.assignment, out, stdout)
    stdout.write(f"error={res.error!r},conflicts={conflict_pairs(g, res.assignment)}\n")


def run_oracle(matrix_text: str, bands: int, threshold: float, fitness: str, out: str | None, stdout) -> None:
    m = config.read_matrix_text(matrix_text)
    best, err = assign_oracle(m, threshold, bands, fitness)
    g = build_graph(m, threshold)
    _emit_assignment(best, out, stdout)
    stdout.write(f"error={err!r},conflicts={conflict_pairs(g, best)}\n")


def _emit_assignment(f, out, stdout):
    rows = [[str(i), str(int(b))] for i, b in enumerate(f)]
    text = config.rows_to_csv(rows, ("reader_id", "band"))
    if out:
        _write_out(out, text)
    else:
        stdout.write(text)


def run_simulate(scenario_text: str, out: str) -> None:
    sc = config.parse_scenario_text(scenario_text)
    res = netsim.run(sc)
    config.append_rows(out, config.result_rows(0, "none", "", sc, res))


def run_sweep(scenario_text: str, param: str, values: list, seeds: str, out: str) -> None:
    sc = config.parse_scenario_text(scenario_text)
    vals = [_parse_value(param, v) for v in values]
    rows = []
    for i, (v, s) in enumerate(zip(vals, netsim.sweep_scenarios(sc, param, vals, seeds))):
        rows += config.result_rows(i, param, v, s, netsim.run(s))
    config.append_rows(out, rows)


def run_dynamic(scenario_text: str, epochs: int, tau: float, population: int, iterations: int, out: str) -> None:
    sc = config.parse_scenario_text(scenario_text)
    ga = replace(sc.ga, population_size=population, iterations=iterations)
    traces = {}
    for policy in ("frozen", "reallocate"):
        chain = netsim.fading_chain(sc, len(sc.readers), stream=1)
        traces[policy] = netsim.dynamic_run(sc, chain, policy, epochs, tau, ga)
    rows = [[str(e), repr(float(traces["frozen"][e])), repr(float(traces["reallocate"][e]))] for e in range(epochs)]
    config.append_rows(out, rows, ("epoch", "frozen_mw", "reallocate_mw"))


def _resolve_scenario(path, seed: int | None, mode=None, static=False) -> tuple[str, int]:
    """Apply command-line overrides and return (canonical text, seed).

    Presets are expanded with the run seed before being written out, so the
    canonical text always carries concrete tag positions.
    """
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as e:
        raise ConfigError(f"cannot read scenario file: {e.strerror}", path) from e
    try:
        doc = config.tomli.loads(text)
    except config.tomli.TOMLDecodeError as e:
        raise ConfigError(f"parse error: {e}", path) from e
    sim = doc.setdefault("sim", {})
    if not isinstance(sim, dict):
        raise ConfigError("expected a table", "sim")
    if seed is not None:
        sim["seed"] = seed
    if mode:
        sim["mode"] = mode
    if static:
        ch = doc.setdefault("channel", {})
        if not isinstance(ch, dict):
            raise ConfigError("expected a table", "channel")
        ch["static"] = True
    sc = config.scenario_from_dict(doc)
    return config.emit_scenario(sc), sc.seed


def execute(command: str, args: dict, seed: int, scenario: str | None, inputs: dict, out: str, stdout) -> None:
    if command == "assign":
        run_assign(inputs["matrix"], args["bands"], args["threshold_mw"], args["population"], args["iterations"],
                   args["fitness"], seed, out, stdout)
    elif command == "oracle":
        run_oracle(inputs["matrix"], args["bands"], args["threshold_mw"], args["fitness"], out, stdout)
    elif command == "simulate":
        run_simulate(scenario, out)
    elif command == "sweep":
        run_sweep(scenario, args["param"], args["values"], args["seeds"], out)
    elif command == "dynamic":
        run_dynamic(scenario, args["epochs"], args["tau"], args["population"], args["iterations"], out)
    elif command == "generate":
        _write_out(out, scenario)
    else:
        raise ConfigError(f"cannot replay command {command!r}", "manifest.command")


def _dispatch(ns, stdout) -> None:
    cmd = ns.command
    if cmd == "replay":
        man = config.read_manifest(ns.manifest)
        execute(man["command"], man["args"], man["seed"], man.get("scenario"), man.get("inputs", {}), ns.out, stdout)
        return

    seed = _seed(ns.seed)
    scenario, inputs, args = None, {}, {}
    if cmd in ("assign", "oracle", "generate") and seed is None:
        seed = 0
    if cmd in ("assign", "oracle"):
        try:
            inputs["matrix"] = open(ns.matrix, encoding="utf-8").read()
        except OSError as e:
            raise ConfigError(f"cannot read matrix file: {e.strerror}", ns.matrix) from e
        args = {"bands": ns.bands, "threshold_mw": ns.threshold_mw, "fitness": ns.fitness}
        if cmd == "assign":
            args.update(population=ns.population, iterations=ns.iterations)
    elif cmd == "simulate":
        scenario, seed = _resolve_scenario(ns.scenario, seed, ns.mode, ns.static_channel)
    elif cmd == "sweep":
        scenario, seed = _resolve_scenario(ns.scenario, seed, ns.mode, ns.static_channel)
        args = {"param": ns.param, "values": _values(ns.values), "seeds": ns.seeds}
    elif cmd == "dynamic":
        scenario, seed = _resolve_scenario(ns.scenario, seed)
        args = {"epochs": ns.epochs, "tau": ns.tau, "population": ns.population, "iterations": ns.iterations}
    elif cmd == "generate":
        params = {}
        for kv in ns.param:
            if "=" not in kv:
                raise ConfigError(f"expected KEY=VALUE, got {kv!r}", "--param")
            k, v = kv.split("=", 1)
            params[k.strip()] = v.strip()
        scenario = config.emit_scenario(config.generate_scenario(ns.kind, params, seed))
        args = {"kind": ns.kind, "params": params}

    out = getattr(ns, "out", None)
    execute(cmd, args, seed, scenario, inputs, out, stdout)
    if out:
        config.write_manifest(_manifest_path(out), config.make_manifest(cmd, args, seed, scenario, inputs))


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        stderr.write(parser.format_usage())
        return 1
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            stderr.write(parser.format_usage())
            return 1
        _dispatch(ns, stdout)
    except UsageError as e:
        stderr.write(f"{e}\n")
        return 1
    except (ConfigError, DomainError) as e:
        stderr.write(f"error: {e}\n")
        return 1
    except Exception as e:  # runtime failures
        stderr.write(f"runtime error: {type(e).__name__}: {e}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
