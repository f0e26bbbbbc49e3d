"""Command-line entry point: ``selfsim <command> --group builtin:<key>|<file> ...``.

Exit codes: 0 success, 2 input error, 3 inconclusive (a budget ran out).
JSON is the default output; floats carry 12 significant digits.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import registry
from .contraction import ball, critical_exponent_scan
from .dsl import GroupDefinitionError, parse_group, print_group
from .machine import Budget, Inconclusive, Machine
from .nucleus import NotContracting, activity_class, compute_nucleus, nucleus_json, self_replicating_check
from .potential import (CapacityProblem, SolverDiverged, TilesNotDisjoint, capacity, capacity_decay_scan,
                        capacity_mc)
from .randwalk import (BadParams, NotSymmetric, ReportConfig, build_measure, count_traverses, liouville_report,
                       orbit_walk, simulate_sections, traverse_rate)
from .schreier import (LengthMismatch, MemoryBudget, graph_stats, level_graph, ss_complex, suffix_cylinder,
                       tile_graph, tiles_to_dot, to_csv, to_dot, to_json)
from .thurston import (ClassBasis, NonConvergence, PartialBasis, pc_lower_bound, spectral_radius, thurston_structure,
                       verdict_at)
from .words import EpPoint

log = logging.getLogger("selfsim")

INPUT_ERRORS = (GroupDefinitionError, registry.UnknownKey, BadParams, NotSymmetric, TilesNotDisjoint,
                LengthMismatch, FileNotFoundError, ValueError)
BUDGET_ERRORS = (Inconclusive, MemoryBudget, PartialBasis, NonConvergence, SolverDiverged)


class InputError(Exception):
    pass


# --- output ------------------------------------------------------------------------

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.12g}")
    return x


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2)


def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    lines = [",".join(keys)]
    for r in rows:
        vals = []
        for k in keys:
            v = _clean(r.get(k))
            vals.append("" if v is None else str(v))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


# --- inputs ---------------------------------------------------------------------------

def load_group(source: str):
    """``(GroupDef, BuiltinEntry | None)`` from ``builtin:<key>`` or a DSL file."""
    if source is None:
        raise InputError("--group is required")
    if source.startswith("builtin:"):
        entry = registry.get(source.split(":", 1)[1])
        return entry.group, entry
    return parse_group(Path(source).read_text()), None


def _budget(args) -> Budget:
    b = Budget()
    if args.max_states is not None:
        b.max_states = int(args.max_states)
    if args.max_depth is not None:
        b.max_depth = int(args.max_depth)
    if args.max_nucleus is not None:
        b.max_nucleus_size = int(args.max_nucleus)
    if getattr(args, "conj_radius", None) is not None:
        b.conj_radius = int(args.conj_radius)
    return b


def _word(text: str, d: int) -> tuple[int, ...]:
    text = text.strip()
    if any(not c.isdigit() or int(c) >= d for c in text):
        raise InputError(f"{text!r} is not a word over the alphabet 0..{d - 1}")
    return tuple(int(c) for c in text)


def vertex_set(spec: str, d: int, n: int) -> np.ndarray:
    """``suffix:<word>``, ``list:i,j,...`` or ``file:<path>`` (one index per line)."""
    kind, _, rest = spec.partition(":")
    if kind == "suffix":
        return suffix_cylinder(_word(rest, d), d, n)
    if kind == "list":
        vals = [int(x) for x in rest.split(",") if x.strip()]
    elif kind == "file":
        vals = [int(x) for x in Path(rest).read_text().split()]
    else:
        raise InputError(f"vertex set {spec!r}: expected suffix:, list: or file:")
    if any(v < 0 or v >= d ** n for v in vals):
        raise InputError(f"vertex index out of range for level {n}")
    return np.asarray(vals, dtype=np.int64)


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    text = str(text)
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _measure(args, machine: Machine, entry):
    gens = args.generators.split(",") if args.generators else (list(entry.measure) if entry and entry.measure else None)
    return build_measure(machine, args.measure, generators=gens, alpha=args.alpha, beta=args.beta,
                         radius=args.mu_radius, seed=args.seed)


def _tiles(args, entry, d: int):
    if args.tiles:
        a, b = args.tiles.split(",")
        return _word(a, d), _word(b, d)
    if entry is None or entry.tiles is None:
        raise InputError("no default tiles for this group; pass --tiles u,v")
    return tuple(_word(t, d) for t in entry.tiles)


# --- commands -----------------------------------------------------------------------

def cmd_parse(args, group, entry, machine):
    if args.format == "dsl":
        return print_group(group)
    return {"alphabet": group.alphabet_size,
            "generators": [{"name": g.name, "perm": list(g.perm), "sections": [group.format(s) for s in g.sections]}
                           for g in group.generators],
            "dsl": print_group(group)}


def cmd_nucleus(args, group, entry, machine):
    try:
        n = compute_nucleus(machine)
    except NotContracting as exc:
        return {"status": "not contracting", "witness_state": exc.state, "loop": list(exc.loop),
                "word": group.format(exc.word) if exc.word is not None else None}
    return nucleus_json(n)


def cmd_activity(args, group, entry, machine):
    names = args.gen.split(",") if args.gen else group.names
    out = {}
    for name in names:
        a = activity_class(machine, name)
        out[name] = {"class": str(a), "witness": a.witness}
    if args.self_replicating:
        status, data = self_replicating_check(machine)
        out["self_replicating"] = status
    return out


def _graph_out(args, g, name):
    fmt = args.format or "dot"
    if args.stats:
        return graph_stats(g)
    if fmt == "dot":
        return to_dot(g, name)
    if fmt == "csv":
        return to_csv(g)
    return to_json(g)


def cmd_schreier(args, group, entry, machine):
    weights = None
    if args.measure_weights:
        weights = _measure(args, machine, entry).weights(machine)
    return _graph_out(args, level_graph(machine, args.level, weights), f"schreier_{args.level}")


def cmd_tiles(args, group, entry, machine):
    t = tile_graph(machine, compute_nucleus(machine), args.level)
    fmt = args.format or "dot"
    if fmt == "dot":
        return tiles_to_dot(t, machine.d)
    pairs = [{"u": int(u), "v": int(v)} for u, v in t.pairs]
    return _csv(pairs) if fmt == "csv" else {"level": args.level, "pairs": pairs}


def cmd_sscomplex(args, group, entry, machine):
    return _graph_out(args, ss_complex(machine, compute_nucleus(machine), args.level), f"sscomplex_{args.level}")


def cmd_capacity(args, group, entry, machine):
    mu = _measure(args, machine, entry)
    weights = mu.weights(machine)
    if args.scan:
        u_A, u_B = _tiles(args, entry, machine.d)
        rows = capacity_decay_scan(machine, compute_nucleus(machine), weights, u_A, u_B, _ints(args.scan),
                                   args.p, args.tol)
        return _csv(rows) if args.format == "csv" else {"tiles": ["".join(map(str, u_A)), "".join(map(str, u_B))],
                                                        "p": args.p, "series": rows}
    if args.level is None:
        raise InputError("--level or --scan is required")
    if not (args.A and args.B):
        u_A, u_B = _tiles(args, entry, machine.d)
        args.A = args.A or "suffix:" + "".join(map(str, u_A))
        args.B = args.B or "suffix:" + "".join(map(str, u_B))
    A = vertex_set(args.A, machine.d, args.level)
    B = vertex_set(args.B, machine.d, args.level)
    sol = capacity(CapacityProblem(level_graph(machine, args.level, weights), A, B, args.p), tol=args.tol)
    out = {"capacity": sol.capacity, "residual": sol.residual, "method": sol.method, "iterations": sol.iterations,
           "converged": sol.converged, "disconnected": sol.disconnected, "level": args.level, "p": args.p}
    if args.mc:
        mc = capacity_mc(machine, weights, args.level, A, B, args.mc, args.seed)
        out["monte_carlo"] = {"estimate": mc.estimate, "stderr": mc.stderr, "trials": mc.trials}
    return out


def cmd_eta(args, group, entry, machine):
    table = ball(machine, args.radius)
    scan = critical_exponent_scan(machine, _floats(args.p_list), args.level, table, min_length=args.min_length)
    rows = [{"p": r.p, "n": r.n, "radius": r.radius, "eta": r.value, "root": r.root,
             "argmax": group.format(r.argmax) if r.argmax is not None else None,
             "considered": r.considered, "flagged": r.flagged} for r in scan.rows]
    if args.format == "csv":
        return _csv(rows)
    return {"rows": rows, "p_hat": scan.p_hat, "p_interp": scan.p_interp, "ball_size": len(table),
            "ball_complete": table.complete}


def cmd_thurston(args, group, entry, machine):
    reps = args.basis.split(",") if args.basis else (list(entry.basis) if entry and entry.basis else None)
    if not reps:
        raise InputError("no default basis for this group; pass --basis g1,g2,...")
    basis = ClassBasis([group.word(r) for r in reps], machine.budget.conj_radius, reps)
    st = thurston_structure(machine, basis)
    out = {"basis": reps, "unresolved": [{"column": j, "section": group.format(w)} for j, w in st.unresolved],
           "warnings": st.warnings, "cycles": st.details}
    ps = _floats(args.p_list)
    out["matrix"] = {f"{p:g}": st.matrix(p) for p in ps}
    out["rho"] = {f"{p:g}": spectral_radius(st.matrix(p)) for p in ps}
    out["verdicts"] = {f"{p:g}": verdict_at(p, out["rho"][f"{p:g}"]) for p in ps}
    if args.scan:
        lo, hi = (float(x) for x in args.scan.split(":"))
        b = pc_lower_bound(machine, basis, (lo, hi), args.tol, structure=st)
        out["p_star"] = b.p_star
        out["bracket"] = list(b.bracket) if b.bracket else None
        out["verdict"] = b.verdict
    return out


def cmd_walk(args, group, entry, machine):
    mu = _measure(args, machine, entry)
    if args.orbit:
        r = orbit_walk(machine, mu, EpPoint.parse(args.orbit), args.t, args.trials, args.seed)
        return {"statistic": "orbit_no_return", "t": r.t_max, "trials": r.trials, "no_return": r.no_return,
                "stderr": r.stderr, "return_frequency": r.return_frequency, "discarded": r.discarded}
    table = ball(machine, args.radius)
    cps = _ints(args.checkpoints) if args.checkpoints else [args.t]
    st = simulate_sections(machine, mu, args.t, _ints(args.levels), args.trials, args.seed, cps, table)
    rows = st.rows()
    return _csv(rows) if args.format == "csv" else rows


def cmd_traverses(args, group, entry, machine):
    n = args.level
    if not (args.A and args.B):
        u_A, u_B = _tiles(args, entry, machine.d)
        args.A = args.A or "suffix:" + "".join(map(str, u_A))
        args.B = args.B or "suffix:" + "".join(map(str, u_B))
    A = vertex_set(args.A, machine.d, n)
    B = vertex_set(args.B, machine.d, n)
    if args.word:
        return {"level": n, "word": args.word, "traverses": count_traverses(machine, group.word(args.word), n, A, B)}
    mu = _measure(args, machine, entry)
    r = traverse_rate(machine, mu, n, A, B, args.t, args.trials, args.seed)
    return {"statistic": "traverses_per_step", **r, "trials": args.trials}


def cmd_report(args, group, entry, machine):
    mu = _measure(args, machine, entry)
    cfg = ReportConfig(tiles=_tiles(args, entry, machine.d), capacity_levels=tuple(_ints(args.cap_levels)),
                       section_levels=tuple(_ints(args.levels)), section_t=args.t, section_trials=args.trials,
                       traverse_levels=tuple(_ints(args.traverse_levels)), traverse_t=args.traverse_t,
                       traverse_trials=args.trials, orbit_t=args.orbit_t, orbit_trials=args.orbit_trials,
                       table_radius=args.radius, seed=args.seed)
    return liouville_report(machine, mu, cfg)


def cmd_registry(args, group, entry, machine):
    if args.action == "list":
        return [{"key": k, "provenance": registry.get(k).provenance} for k in registry.list_keys()]
    if not args.key:
        raise InputError("registry show needs a key")
    e = registry.get(args.key)
    if args.format == "dsl":
        return e.text
    return {"key": e.key, "provenance": e.provenance, "alphabet": e.group.alphabet_size,
            "generators": e.group.names, "basis": list(e.basis), "tiles": list(e.tiles) if e.tiles else None,
            "measure": list(e.measure), "notes": e.notes, "dsl": print_group(e.group)}


# --- parser -------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--group", help="builtin:<key> or path to a DSL file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for compatibility; output never depends on it")
    p.add_argument("--config", action="append", default=[],
                   help="key=value pair or a file of key=value lines; repeatable")
    p.add_argument("--format", choices=["json", "csv", "dot", "dsl"], default=None)
    p.add_argument("--max-states", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--max-nucleus", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _measure_opts(p):
    p.add_argument("--measure", default="uniform", choices=["uniform", "lazy", "heavytail"])
    p.add_argument("--generators", default=None, help="comma-separated generator names")
    p.add_argument("--alpha", type=float, default=0.5, help="hold probability of the lazy measure")
    p.add_argument("--beta", type=float, default=2.5, help="tail exponent of the heavy-tail measure")
    p.add_argument("--mu-radius", type=int, default=64, help="largest word length of the heavy-tail measure")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="selfsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    add("parse", cmd_parse, "parse and print a group definition")
    add("nucleus", cmd_nucleus, "compute the nucleus")
    p = add("activity", cmd_activity, "activity class of generators")
    p.add_argument("--gen", default=None)
    p.add_argument("--self-replicating", action="store_true")
    for name, func in (("schreier", cmd_schreier), ("sscomplex", cmd_sscomplex)):
        p = add(name, func, f"{name} graph of a level")
        p.add_argument("--level", type=int, required=True)
        p.add_argument("--stats", action="store_true", help="print size, components and diameter instead")
        p.add_argument("--measure-weights", action="store_true", help="weight edges by the measure")
        _measure_opts(p)
    p = add("tiles", cmd_tiles, "tile adjacency graph of a level")
    p.add_argument("--level", type=int, required=True)
    p = add("capacity", cmd_capacity, "p-capacity between vertex sets")
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--A", default=None, help="suffix:<word>, list:i,j,... or file:<path>")
    p.add_argument("--B", default=None)
    p.add_argument("--tiles", default=None, help="u,v tile words (defaults from the registry)")
    p.add_argument("--scan", default=None, help="levels, e.g. 3:7")
    p.add_argument("--mc", type=int, default=0, help="Monte-Carlo trials")
    p.add_argument("--tol", type=float, default=1e-10)
    _measure_opts(p)
    p = add("eta", cmd_eta, "contraction coefficient estimates")
    p.add_argument("--p", dest="p_list", default="1,2")
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--radius", type=int, default=16)
    p.add_argument("--min-length", type=float, default=None)
    p = add("thurston", cmd_thurston, "Thurston matrix, spectral radius and critical exponent")
    p.add_argument("--basis", default=None)
    p.add_argument("--p", dest="p_list", default="2")
    p.add_argument("--scan", default=None, help="pmin:pmax")
    p.add_argument("--conj-radius", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-3)
    p = add("walk", cmd_walk, "section-length statistic or boundary orbit walk")
    p.add_argument("--t", type=int, default=1024)
    p.add_argument("--levels", default="2,4,6")
    p.add_argument("--checkpoints", default=None)
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--radius", type=int, default=8, help="radius of the exact length table")
    p.add_argument("--orbit", default=None, help="walk on the orbit of this point, e.g. '(0)'")
    _measure_opts(p)
    p = add("traverses", cmd_traverses, "count traverses between vertex sets")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--A", default=None)
    p.add_argument("--B", default=None)
    p.add_argument("--tiles", default=None)
    p.add_argument("--word", default=None, help="explicit word s_t*...*s_1")
    p.add_argument("--t", type=int, default=256)
    p.add_argument("--trials", type=int, default=16)
    _measure_opts(p)
    p = add("report", cmd_report, "heuristic Liouville diagnostics")
    p.add_argument("--tiles", default=None)
    p.add_argument("--cap-levels", default="3:7")
    p.add_argument("--levels", default="2,4,6")
    p.add_argument("--traverse-levels", default="3,4")
    p.add_argument("--t", type=int, default=1024)
    p.add_argument("--traverse-t", type=int, default=256)
    p.add_argument("--trials", type=int, default=16)
    p.add_argument("--orbit-t", type=int, default=0)
    p.add_argument("--orbit-trials", type=int, default=0)
    p.add_argument("--radius", type=int, default=8)
    _measure_opts(p)
    p = add("registry", cmd_registry, "list or show builtin groups")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("key", nargs="?")
    return parser


def _config_pairs(items) -> dict:
    out = {}
    for item in items:
        path = Path(item)
        lines = path.read_text().splitlines() if "=" not in item and path.exists() else [item]
        if "=" not in item and not path.exists():
            raise InputError(f"config {item!r} is neither key=value nor a file")
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InputError(f"config line {line!r} is not key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config_pairs(args.config)
    if cfg:
        # config values act as defaults; explicit flags still win
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise InputError(f"unknown config key(s): {', '.join(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _effective(args) -> dict:
    skip = {"func", "config", "verbose", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        group = entry = machine = None
        if args.command != "registry":
            group, entry = load_group(args.group)
            machine = Machine(group, _budget(args))
        result = args.func(args, group, entry, machine)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BUDGET_ERRORS as exc:
        print(f"inconclusive: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, str):
        text = result
        if args.format in (None, "dot") and text.startswith(("graph", "digraph")):
            text = f"// config: {json.dumps(_clean(_effective(args)))}\n" + text
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(dumps({"command": args.command, "config": _effective(args), "result": result}) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
