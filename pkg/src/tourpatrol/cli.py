"""Command-line front end: generate, solve, simulate, compare, export.

Exit codes: 0 success, 2 usage or input error, 3 infeasible scenario,
4 exhaustive search refused because of the size cap.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from . import grid as gridmod
from . import instances, scenario_io
from .experiments import COOPERATIVE_METHODS, SINGLE_HOP, ComparisonRow, compare_instance, grid_sweep
from .meeting import select_meeting_points
from .milp import emit_milp
from .scenario_io import FormatError, Scenario, Solution
from .scheduling import evaluate_tree_delay
from .simulator import default_window, disturbances_from_trace, init_world, run_disturbed
from .tours import DomainError, StructureError, TourTree
from .treesel import SizeCapError, SolveResult, solve

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_SIZE_CAP = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _summary(sc: Scenario) -> str:
    return f"n={sc.n} total_length={scenario_io._num(sc.total_length())} edges={sc.edge_count()}"


# --- generate ---------------------------------------------------------------

def _grid_scenario(inst: gridmod.GridInstance, meta: dict) -> Scenario:
    return Scenario(multigraph=inst.multigraph, grid=inst.grid, subtours=list(inst.subtours), meta=meta)


def cmd_generate(args) -> int:
    kind = args.kind
    if kind == "grid":
        obstacles = frozenset(_parse_cell(c) for c in args.obstacle)
        grid = gridmod.GridScenario(args.w, args.h, obstacles, (0, 0), args.rcom, args.n, args.seed)
        inst = gridmod.build_grid_instance(grid, restarts=args.restarts)
        sc = _grid_scenario(inst, {"kind": "grid", "restarts": args.restarts})
    elif kind == "corridor":
        sc = _grid_scenario(gridmod.corridor_scenario(), {"kind": "corridor"})
    elif kind == "3sat":
        text = instances.PAPER_FORMULA if args.formula == "paper-example" else args.formula
        clauses = instances.parse_cnf(text)
        graph, fixed = instances.gen_3sat_mdt(clauses)
        sc = Scenario(graph=graph, fixed_directions=fixed, meta={"kind": "3sat", "formula": text})
    elif kind == "chainarms":
        graph = instances.gen_chain_arms(args.k, args.big, args.small, args.arm_len)
        sc = Scenario(graph=graph, meta={"kind": "chainarms", "k": args.k, "big": args.big, "small": args.small})
    elif kind == "random":
        rng = np.random.default_rng(args.seed)
        graph = instances.random_tour_graph(rng, args.n, edge_prob=args.edge_prob, integer=args.integer,
                                            sensing=args.sensing)
        sc = Scenario(graph=graph, meta={"kind": "random", "seed": args.seed, "edge_prob": args.edge_prob})
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown kind {kind!r}")
    _emit(scenario_io.dumps(sc), args.out)
    print(_summary(sc), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def _parse_cell(text: str) -> tuple:
    try:
        x, y = (int(p) for p in text.split(","))
    except ValueError:
        raise UsageError(f"cells are given as x,y, got {text!r}") from None
    return x, y


# --- solve --------------------------------------------------------------------

def _resolve(sc: Scenario) -> Scenario:
    """Pick meeting points if the scenario still has candidate lists."""
    if sc.graph is not None:
        return sc
    graph, _ = select_meeting_points(sc.multigraph)
    meta = dict(sc.meta, meeting_selection="greedy")
    return Scenario(graph=graph, grid=sc.grid, subtours=sc.subtours, fixed_directions=sc.fixed_directions,
                    meta=meta)


def solve_scenario(sc: Scenario, method: str, cap: Optional[int] = None) -> tuple[Scenario, SolveResult]:
    sc = _resolve(sc)
    fixed = sc.fixed_directions
    if method == "opt":
        res = solve(sc.graph, "opt", fixed_directions=fixed, cap=cap)
    else:
        res = solve(sc.graph, method)
        if fixed:
            res = SolveResult(res.tree, dict(fixed), evaluate_tree_delay(res.tree, fixed), res.method)
    sc.solution = Solution.from_result(res)
    return sc, res


def cmd_solve(args) -> int:
    sc, res = solve_scenario(scenario_io.load(args.scenario), args.method, args.cap)
    if args.out:
        _emit(scenario_io.dumps(sc), args.out)
    s = sc.solution
    print(f"method={s.method} n={sc.n} WI={scenario_io._fmt(s.worst_idleness)} "
          f"WD={scenario_io._fmt(s.worst_delay)} depth={s.depth}")
    return EXIT_OK


# --- simulate -------------------------------------------------------------------

def _parse_disturbance(text: str, ids) -> tuple:
    fields = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise UsageError(f"disturbances look like tour=5,t=40,dt=2, got {text!r}")
        fields[key.strip()] = value.strip()
    try:
        name, t, dt = fields["tour"], float(fields["t"]), float(fields["dt"])
    except (KeyError, ValueError):
        raise UsageError(f"disturbances need tour, t and dt, got {text!r}") from None
    by_name = {str(v): v for v in ids}
    if name not in by_name:
        raise UsageError(f"unknown tour {name!r} in disturbance")
    return t, by_name[name], dt


def cmd_simulate(args) -> int:
    sc = scenario_io.load(args.scenario)
    if sc.solution is None or sc.graph is None:
        raise UsageError("scenario has no solution; run 'solve' first")
    tree = TourTree(sc.graph, sc.solution.parent)
    if args.replay:
        with open(args.replay, encoding="utf-8") as fh:
            trace = scenario_io.read_trace_csv(fh.read(), sc.graph.ids())
        disturbances = disturbances_from_trace(trace)
    else:
        disturbances = [_parse_disturbance(d, sc.graph.ids()) for d in args.disturb]
    warmup, horizon = default_window(tree)
    # the default window starts settling again after the last disturbance
    last = max((d[0] for d in disturbances), default=0.0)
    warmup, horizon = warmup + last, horizon + last
    warmup = warmup if args.warmup is None else args.warmup
    horizon = horizon if args.horizon is None else args.horizon
    world = init_world(tree, sc.solution.directions, resync=args.resync, record_trace=bool(args.trace))
    metrics = run_disturbed(world, disturbances, horizon, warmup)
    row = scenario_io.metrics_row(sc.solution.method, sc.n, sc.solution, metrics)
    _emit(scenario_io.write_csv([row], scenario_io.METRICS_COLUMNS), args.out)
    if args.trace:
        _emit(scenario_io.trace_csv(world.trace), args.trace)
    if metrics.short_horizon:
        print("warning: window shorter than one cycle; measured values are not meaningful", file=sys.stderr)
    return EXIT_OK


# --- compare --------------------------------------------------------------------

def _int_range(text: str) -> list:
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition("..")
        try:
            out += list(range(int(lo), int(hi) + 1)) if sep else [int(lo)]
        except ValueError:
            raise UsageError(f"expected integers like 2..20 or 0,1,2, got {text!r}") from None
    return out


def cmd_compare(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in COOPERATIVE_METHODS + (SINGLE_HOP,)]
    if bad:
        raise UsageError(f"unknown methods: {', '.join(bad)}")
    if args.scenario:
        sc = scenario_io.load(args.scenario)
        if sc.grid is None or sc.subtours is None:
            raise UsageError("compare needs a grid scenario (single-hop detours need the grid)")
        metric = gridmod.GridMetric(sc.grid)
        mg = sc.multigraph or gridmod.candidate_meetings(sc.subtours, sc.grid)
        inst = gridmod.GridInstance(sc.grid, list(sc.subtours), mg, metric)
        rows = compare_instance(inst, methods, sc.meta.get("kind", "scenario"), sc.grid.rng_seed)
    else:
        rows = grid_sweep(args.w, args.h, _int_range(args.n), _int_range(args.seeds), args.rcom,
                          args.restarts, methods, args.workers)
    dicts = [r.as_dict() for r in rows]
    _emit(scenario_io.write_csv(dicts, ComparisonRow.columns()), args.out)
    return EXIT_OK


# --- export ---------------------------------------------------------------------

def cmd_export(args) -> int:
    sc = scenario_io.load(args.scenario)
    if args.format == "ascii-map":
        if sc.grid is None:
            raise UsageError("ascii-map needs a grid scenario")
        text = gridmod.ascii_map(sc.grid, sc.subtours or [])
    elif sc.graph is None:
        raise UsageError(f"{args.format} export needs resolved meeting points; run 'solve' first")
    elif args.format == "lp":
        text = emit_milp(sc.graph)
    else:
        text = scenario_io.to_dot(sc.graph, sc.solution)
    _emit(text, args.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tourpatrol", description="Cooperative data gathering over patrol tours.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a scenario file")
    g.add_argument("kind", choices=["grid", "corridor", "3sat", "chainarms", "random"])
    g.add_argument("--out", "-o", help="output file (default stdout)")
    g.add_argument("--w", type=int, default=20, help="grid width")
    g.add_argument("--h", type=int, default=60, help="grid height")
    g.add_argument("--n", type=int, default=5, help="robot count (grid) or tour count (random)")
    g.add_argument("--rcom", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--restarts", type=int, default=2, help="perturbed 2-opt restarts for the grand tour")
    g.add_argument("--obstacle", action="append", default=[], metavar="X,Y")
    g.add_argument("--formula", default="paper-example",
                   help="'paper-example' or clauses like '1 2 3; -1 -2 4'")
    g.add_argument("--k", type=int, default=6)
    g.add_argument("--big", type=float, default=1000.0)
    g.add_argument("--small", type=float, default=0.1)
    g.add_argument("--arm-len", type=int, default=None)
    g.add_argument("--edge-prob", type=float, default=0.25)
    g.add_argument("--integer", action="store_true", help="integer lengths and positions")
    g.add_argument("--sensing", choices=["full", "mixed", "none"], default="full")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="select a tree and directions")
    s.add_argument("scenario")
    s.add_argument("--method", choices=["sp", "cg", "opt"], default="cg")
    s.add_argument("--cap", type=int, default=None, help="largest tour count for --method opt")
    s.add_argument("--out", "-o")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="run the online executor on a solved scenario")
    m.add_argument("scenario")
    m.add_argument("--horizon", type=float, default=None)
    m.add_argument("--warmup", type=float, default=None)
    m.add_argument("--disturb", action="append", default=[], metavar="tour=ID,t=T,dt=D")
    m.add_argument("--replay", metavar="TRACE", help="take disturbances from a trace CSV")
    m.add_argument("--resync", choices=["shift", "literal"], default="shift")
    m.add_argument("--trace", metavar="FILE", help="write the event trace CSV")
    m.add_argument("--out", "-o", help="metrics CSV (default stdout)")
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="cooperative methods against single-hop delivery")
    c.add_argument("scenario", nargs="?", help="grid scenario; without it a sweep over --n and --seeds runs")
    c.add_argument("--methods", default="cg,sp,singlehop")
    c.add_argument("--n", default="2..20")
    c.add_argument("--seeds", default="0")
    c.add_argument("--w", type=int, default=20)
    c.add_argument("--h", type=int, default=60)
    c.add_argument("--rcom", type=int, default=1)
    c.add_argument("--restarts", type=int, default=2)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out", "-o")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("export", help="DOT, LP model or ASCII map")
    e.add_argument("scenario")
    e.add_argument("--format", choices=["dot", "lp", "ascii-map"], required=True)
    e.add_argument("--out", "-o")
    e.set_defaults(func=cmd_export)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SizeCapError as exc:
        print(f"refusing exhaustive search: {exc}", file=sys.stderr)
        return EXIT_SIZE_CAP
    except StructureError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, FormatError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
