"""Scenario files, DOT export and CSV writers.

A scenario file is JSON with sorted keys and two-space indentation, so a
parse followed by an emit reproduces the canonical text byte for byte.
Tour ids stay integers or strings; maps keyed by tour id are stored as
lists of pairs because JSON object keys are always strings.  The fields
are documented in ``docs/formats.md``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .grid import GridScenario, SubTour
from .scheduling import schedule_for
from .simulator import Metrics, TraceEvent
from .tours import Direction, DomainError, StructureError, Tour, TourGraph, TourMultiGraph, TourTree, edge_key, idkey, sorted_ids
from .treesel import SolveResult

VERSION = "patrol-scenario/1"


class FormatError(ValueError):
    """A scenario file cannot be parsed."""


@dataclass
class Solution:
    method: str
    parent: dict
    directions: dict
    waits: dict
    worst_delay: float
    worst_idleness: float
    depth: int

    @classmethod
    def from_result(cls, res: SolveResult) -> "Solution":
        sched = schedule_for(res.tree, res.directions)
        return cls(res.method, dict(res.tree.parent), {v: Direction(d) for v, d in res.directions.items()},
                   dict(sched.wait), res.report.worst_delay, res.report.worst_idleness, res.tree.depth())

    def tree(self, graph: TourGraph) -> TourTree:
        return TourTree(graph, self.parent)


@dataclass
class Scenario:
    """Tours with either resolved meeting points (``graph``) or candidates (``multigraph``)."""

    graph: Optional[TourGraph] = None
    multigraph: Optional[TourMultiGraph] = None
    grid: Optional[GridScenario] = None
    subtours: Optional[list] = None
    fixed_directions: Optional[dict] = None
    solution: Optional[Solution] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.graph is None) == (self.multigraph is None):
            raise DomainError("a scenario holds exactly one of graph or multigraph")

    @property
    def tours(self) -> Mapping:
        return (self.graph or self.multigraph).tours

    @property
    def v0(self):
        return (self.graph or self.multigraph).v0

    @property
    def n(self) -> int:
        return len(self.tours)

    def edge_count(self) -> int:
        return len(self.graph.edges) if self.graph is not None else len(self.multigraph.candidates)

    def total_length(self) -> float:
        return float(sum(t.length for t in self.tours.values()))


# --- encoding ---------------------------------------------------------------

def _num(x: float):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2 ** 53 else x


def _pairs(mapping: Mapping) -> list:
    return [[k, mapping[k]] for k in sorted_ids(mapping)]


def _tour_dict(t: Tour, with_meetings: bool) -> dict:
    d = {"id": t.id, "length": _num(t.length), "base": None if t.base_position is None else _num(t.base_position)}
    if t.sensing_points is not None:
        d["sensing_points"] = [_num(p) for p in t.sensing_points]
    elif t.fully_sensed:
        d["sensing"] = "full"
    else:
        d["sensing"] = [[_num(a), _num(b)] for a, b in t.sensing_arcs]
    if with_meetings:
        d["meet"] = [[w, _num(p)] for w, p in _pairs(t.meeting_positions)]
    return d


def to_dict(sc: Scenario) -> dict:
    out: dict = {"version": VERSION, "v0": sc.v0, "meta": dict(sc.meta)}
    if sc.graph is not None:
        out["kind"] = "graph"
        out["tours"] = [_tour_dict(sc.graph.tours[v], True) for v in sc.graph.ids()]
        out["edges"] = [list(e) for e in sc.graph.sorted_edges()]
    else:
        mg = sc.multigraph
        out["kind"] = "multigraph"
        out["tours"] = [_tour_dict(mg.tours[v], False) for v in sorted_ids(mg.tours)]
        out["candidates"] = [
            {"pair": list(key), "positions": [[_num(p), _num(q)] for p, q in mg.candidates[key]]}
            for key in sorted(mg.candidates, key=lambda k: (idkey(k[0]), idkey(k[1])))
        ]
    if sc.grid is not None:
        g = sc.grid
        out["grid"] = {
            "width": g.width, "height": g.height, "rcom": g.rcom, "n": g.n, "rng_seed": g.rng_seed,
            "base_cell": list(g.base_cell), "obstacles": [list(c) for c in sorted(g.obstacles)],
        }
    if sc.subtours is not None:
        out["subtours"] = [
            {"id": st.id, "walk": [list(c) for c in st.walk], "sensing": [int(s) for s in st.sensing]}
            for st in sc.subtours
        ]
    if sc.fixed_directions is not None:
        out["fixed_directions"] = [[v, Direction(d).value] for v, d in _pairs(sc.fixed_directions)]
    if sc.solution is not None:
        s = sc.solution
        out["solution"] = {
            "method": s.method,
            "tree": [[c, p] for c, p in _pairs(s.parent)],
            "directions": [[v, Direction(d).value] for v, d in _pairs(s.directions)],
            "waits": [[v, _num(w)] for v, w in _pairs(s.waits)],
            "worst_delay": _num(s.worst_delay),
            "worst_idleness": _num(s.worst_idleness),
            "depth": s.depth,
        }
    return out


def dumps(sc: Scenario) -> str:
    return json.dumps(to_dict(sc), sort_keys=True, indent=2) + "\n"


def save(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(sc))


# --- decoding ---------------------------------------------------------------

def _id(x):
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise FormatError(f"tour id must be an integer or string, got {x!r}")
    return x


def _tour_from(d: dict) -> Tour:
    kwargs = {}
    if "sensing_points" in d:
        kwargs["sensing_points"] = tuple(d["sensing_points"])
    elif d.get("sensing", "full") != "full":
        kwargs["sensing_arcs"] = tuple(tuple(a) for a in d["sensing"])
    meet = {_id(w): p for w, p in d.get("meet", [])}
    return Tour(_id(d["id"]), d["length"], meeting_positions=meet, base_position=d.get("base"), **kwargs)


def from_dict(data: dict) -> Scenario:
    if data.get("version") != VERSION:
        raise FormatError(f"unsupported scenario version {data.get('version')!r}, expected {VERSION!r}")
    try:
        tours = [_tour_from(t) for t in data["tours"]]
        v0 = _id(data["v0"])
        graph = multigraph = None
        if data.get("kind") == "graph":
            edges = frozenset(edge_key(_id(a), _id(b)) for a, b in data.get("edges", []))
            graph = TourGraph({t.id: t for t in tours}, edges, v0)
        elif data.get("kind") == "multigraph":
            cands = {tuple(_id(x) for x in c["pair"]): [tuple(p) for p in c["positions"]]
                     for c in data.get("candidates", [])}
            multigraph = TourMultiGraph({t.id: t for t in tours}, cands, v0)
        else:
            raise FormatError(f"unknown scenario kind {data.get('kind')!r}")
        grid = None
        if "grid" in data:
            g = data["grid"]
            grid = GridScenario(g["width"], g["height"], frozenset(tuple(c) for c in g["obstacles"]),
                                tuple(g["base_cell"]), g["rcom"], g["n"], g["rng_seed"])
        subtours = None
        if "subtours" in data:
            subtours = [SubTour(st["id"], tuple(tuple(c) for c in st["walk"]), tuple(bool(s) for s in st["sensing"]))
                        for st in data["subtours"]]
        fixed = None
        if "fixed_directions" in data:
            fixed = {_id(v): Direction(d) for v, d in data["fixed_directions"]}
        solution = None
        if "solution" in data:
            s = data["solution"]
            solution = Solution(s["method"], {_id(c): _id(p) for c, p in s["tree"]},
                                {_id(v): Direction(d) for v, d in s["directions"]},
                                {_id(v): float(w) for v, w in s["waits"]},
                                float(s["worst_delay"]), float(s["worst_idleness"]), int(s["depth"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed scenario file: {exc!r}") from None
    except (DomainError, StructureError):
        raise
    except ValueError as exc:
        raise FormatError(f"malformed scenario file: {exc}") from None
    return Scenario(graph, multigraph, grid, subtours, fixed, solution, dict(data.get("meta", {})))


def loads(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not a JSON scenario file: {exc}") from None
    if not isinstance(data, dict):
        raise FormatError("scenario file must hold a JSON object")
    return from_dict(data)


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


# --- DOT --------------------------------------------------------------------

def _dot_id(v) -> str:
    return json.dumps(str(v))


def to_dot(graph: TourGraph, solution: Optional[Solution] = None) -> str:
    """Tour graph in Graphviz DOT; tree arcs are bold and point from child to parent."""
    tree = set()
    if solution is not None:
        tree = {edge_key(c, p) for c, p in solution.parent.items()}
    lines = ["graph tours {", "  node [shape=circle];"]
    for v in graph.ids():
        t = graph.tours[v]
        label = f"{v}\\nl={_num(t.length)}"
        if solution is not None and v in solution.directions:
            label += f"\\n{solution.directions[v].value}"
        extra = ", peripheries=2" if v == graph.v0 else ""
        lines.append(f"  {_dot_id(v)} [label=\"{label}\"{extra}];")
    for a, b in graph.sorted_edges():
        pa, pb = _num(graph.tours[a].meet(b)), _num(graph.tours[b].meet(a))
        if (a, b) in tree:
            child, parent = (a, b) if solution.parent.get(a) == b else (b, a)
            lines.append(f"  {_dot_id(child)} -- {_dot_id(parent)} "
                         f"[dir=forward, style=bold, color=black, label=\"{pa}/{pb}\"];")
        else:
            lines.append(f"  {_dot_id(a)} -- {_dot_id(b)} [style=dashed, color=gray, label=\"{pa}/{pb}\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- CSV --------------------------------------------------------------------

METRICS_COLUMNS = ["method", "n", "WI_analytic", "WI_measured", "WD_analytic", "WD_measured",
                   "convergence_time", "sum_distance", "flags"]
TRACE_COLUMNS = ["time", "robot", "event", "position", "detail"]


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def metrics_flags(m: Metrics) -> str:
    flags = []
    if m.short_horizon:
        flags.append("short_horizon")
    if m.not_converged:
        flags.append("not_converged")
    return ";".join(flags)


def metrics_row(method: str, n: int, sol: Solution, m: Metrics) -> dict:
    return {
        "method": method, "n": n, "WI_analytic": float(sol.worst_idleness), "WI_measured": float(m.measured_WI),
        "WD_analytic": float(sol.worst_delay), "WD_measured": float(m.measured_WD),
        "convergence_time": float(m.convergence_time), "sum_distance": float(m.sum_distance),
        "flags": metrics_flags(m),
    }


def write_csv(rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def trace_csv(trace: Sequence[TraceEvent]) -> str:
    rows = [{"time": e.time, "robot": e.robot, "event": e.kind, "position": e.position, "detail": e.detail}
            for e in trace]
    return write_csv(rows, TRACE_COLUMNS)


def read_trace_csv(text: str, ids: Sequence = ()) -> list:
    """Parse a trace written by :func:`trace_csv`; robot names are mapped back to ``ids``."""
    by_name = {str(v): v for v in ids}
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        robot = by_name.get(row["robot"], row["robot"])
        out.append(TraceEvent(float(row["time"]), robot, row["event"], float(row["position"]), row["detail"]))
    return out
