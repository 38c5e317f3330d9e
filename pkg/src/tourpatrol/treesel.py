"""Selecting a spanning tour tree and directions in a tour graph."""

from __future__ import annotations

import heapq
import itertools
import math
import os
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional

from .scheduling import (
    DelayReport,
    branch_delay,
    choose_direction,
    evaluate_tree_delay,
    minimum_delay_schedule,
)
from .tours import (
    BOTH_DIRECTIONS,
    TOL,
    Direction,
    StructureError,
    TourGraph,
    TourId,
    TourTree,
    idkey,
    own_delay,
    shorter_arc,
    travel_time,
)

DEFAULT_SIZE_CAP = 10


class SizeCapError(ValueError):
    """The exhaustive solver refuses an instance above its size cap."""


@dataclass(frozen=True)
class SolveResult:
    tree: TourTree
    directions: Mapping[TourId, Direction]
    report: DelayReport
    method: str


def _require_connected(graph: TourGraph) -> None:
    if graph.v0 not in graph.tours or not graph.is_connected():
        raise StructureError("tour graph is disconnected")


def _finish(tree: TourTree, directions: Mapping, method: str) -> SolveResult:
    directions = dict(directions)
    return SolveResult(tree, directions, evaluate_tree_delay(tree, directions), method)


# --- MDTD-SP ---------------------------------------------------------------

def bfs_tree(graph: TourGraph) -> TourTree:
    """Union of hop-shortest paths to ``v0``; ties prefer the lower parent id."""
    _require_connected(graph)
    adj = graph.adjacency()
    level = {graph.v0: 0}
    parent = {}
    queue = deque([graph.v0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in level:
                level[w] = level[v] + 1
                queue.append(w)
    for w in graph.tours:
        if w == graph.v0:
            continue
        candidates = [u for u in adj[w] if level[u] == level[w] - 1]
        parent[w] = min(candidates, key=idkey)
    return TourTree(graph, parent)


def mdtd_sp(graph: TourGraph) -> SolveResult:
    tree = bfs_tree(graph)
    schedule, _ = minimum_delay_schedule(tree)
    return _finish(tree, schedule.direction, "SP")


# --- converted graph and MDTD-CG -------------------------------------------

BASE_LABEL = "v0x"


@dataclass(frozen=True)
class ConvertedGraph:
    """Meeting points as vertices, tour segments as weighted edges.

    Vertex 0 is the base station; vertex ``i > 0`` stands for the meeting
    point of the tour pair ``pairs[i]``.  ``adj[i][j] = (weight, tour,
    direction)`` where ``direction`` moves from ``i`` to ``j`` on ``tour``.
    """

    pairs: tuple
    adj: tuple
    v0: TourId

    @property
    def base_vertex(self) -> int:
        return 0

    def label(self, i: int) -> str:
        if i == 0:
            return BASE_LABEL
        a, b = self.pairs[i]
        return f"v{a}{b}" if isinstance(a, int) and isinstance(b, int) else f"v_{a}_{b}"

    def tours_of(self, i: int) -> tuple:
        return (self.v0,) if i == 0 else self.pairs[i]

    def weight(self, i: int, j: int) -> float:
        return self.adj[i][j][0]

    def edges(self) -> list:
        return [(i, j, *self.adj[i][j]) for i in range(len(self.pairs)) for j in sorted(self.adj[i]) if i < j]

    def shortest_paths(self):
        """Dijkstra from the base vertex; returns ``(dist, pred)``."""
        n = len(self.pairs)
        dist = [math.inf] * n
        pred = [None] * n
        dist[0] = 0.0
        heap = [(0.0, 0)]
        done = [False] * n
        while heap:
            d, i = heapq.heappop(heap)
            if done[i]:
                continue
            done[i] = True
            for j in sorted(self.adj[i]):
                nd = d + self.adj[i][j][0]
                if nd < dist[j] - TOL:
                    dist[j] = nd
                    pred[j] = i
                    heapq.heappush(heap, (nd, j))
        return dist, pred

    def path_to_base(self, pred, i: int) -> list:
        path = [i]
        while path[-1] != 0:
            nxt = pred[path[-1]]
            if nxt is None:
                raise StructureError("converted graph is disconnected")
            path.append(nxt)
        return path


def _position(graph: TourGraph, pair, tour) -> float:
    t = graph.tours[tour]
    if pair is None:
        return t.base_position
    other = pair[1] if pair[0] == tour else pair[0]
    return t.meet(other)


def build_converted_graph(graph: TourGraph) -> ConvertedGraph:
    """Build the meeting-point graph; parallel segments keep the shorter arc."""
    _require_connected(graph)
    pairs = [None] + graph.sorted_edges()
    on_tour = {v: [] for v in graph.tours}
    on_tour[graph.v0].append(0)
    for i, (a, b) in enumerate(pairs[1:], start=1):
        on_tour[a].append(i)
        on_tour[b].append(i)
    adj = [dict() for _ in pairs]
    for v in graph.ids():
        tour = graph.tours[v]
        for i, j in itertools.combinations(on_tour[v], 2):
            p, q = _position(graph, pairs[i], v), _position(graph, pairs[j], v)
            w, d = shorter_arc(tour, p, q)
            adj[i][j] = (w, v, d)
            adj[j][i] = (w, v, d.opposite)
    return ConvertedGraph(tuple(pairs), tuple(adj), graph.v0)


def _leaf_direction(graph: TourGraph, v, start: float) -> Direction:
    tour = graph.tours[v]
    if own_delay(tour, start, Direction.CW) <= own_delay(tour, start, Direction.CCW) + TOL:
        return Direction.CW
    return Direction.CCW


def cg_lower_bound(graph: TourGraph) -> float:
    """Lower bound on the worst delay of any tree: own delay plus shortest data route.

    For fully sensed tours this is ``max_v (len_v + l_v)``.
    """
    cg = build_converted_graph(graph)
    dist, _ = cg.shortest_paths()
    per_tour = {}
    for i in range(len(cg.pairs)):
        for v in cg.tours_of(i):
            tour = graph.tours[v]
            if not tour.senses:
                continue
            q = _position(graph, cg.pairs[i], v)
            val = min(own_delay(tour, q, d) for d in BOTH_DIRECTIONS) + dist[i]
            if v == graph.v0 and i != 0:
                continue
            per_tour[v] = min(per_tour.get(v, math.inf), val)
    return max(per_tour.values(), default=0.0)


def _tour_route(cg: ConvertedGraph, start, points) -> list:
    """Tours passed by a converted-graph path as ``(tour, direction on entry)``.

    A return to a tour already passed cuts out the loop in between, so every
    tour occurs once; the origin has no entry direction.
    """
    route = [(start, None)]
    for a, b in zip(points, points[1:]):
        _, tour, d = cg.adj[a][b]
        if tour == route[-1][0]:
            continue
        seen = [t for t, _ in route]
        if tour in seen:
            del route[seen.index(tour) + 1:]
            continue
        route.append((tour, d))
    return route


def mdtd_cg(graph: TourGraph) -> SolveResult:
    cg = build_converted_graph(graph)
    dist, pred = cg.shortest_paths()
    length = {v: math.inf for v in graph.tours}
    path = {}
    length[graph.v0] = 0.0
    path[graph.v0] = [0]
    for i in range(1, len(cg.pairs)):
        for v in cg.pairs[i]:
            if dist[i] < length[v] - TOL:
                length[v] = dist[i]
                path[v] = cg.path_to_base(pred, i)

    def own_term(v):
        tour = graph.tours[v]
        if not tour.senses:
            return 0.0
        start = _position(graph, cg.pairs[path[v][0]], v)
        return min(own_delay(tour, start, d) for d in BOTH_DIRECTIONS)

    order = sorted(graph.tours, key=lambda v: (-(length[v] + own_term(v)), idkey(v)))
    in_tree = {graph.v0}
    parent: dict = {}
    dirs: dict = {}
    for i in order:
        route = _tour_route(cg, i, path[i])
        for (m, _), (nxt, d) in zip(route, route[1:]):
            if m in in_tree:
                break
            parent[m] = nxt
            in_tree.add(m)
            if d is not None:
                dirs.setdefault(nxt, d)
    tree = TourTree(graph, parent)
    # leaves, and tours only ever seen as path origins, get the single-tour rule
    branch = {}
    for v in reversed(tree.preorder()):
        if v not in dirs:
            if tree.children(v):
                dirs[v], _ = choose_direction(tree, v, branch)
            else:
                dirs[v] = _leaf_direction(graph, v, tree.start_position(v))
        branch[v] = branch_delay(tree, v, dirs[v], branch)
    return _finish(tree, dirs, "CG")


# --- exhaustive optimum --------------------------------------------------

def spanning_trees(graph: TourGraph):
    """Every spanning tree as a parent map, by plain edge-subset enumeration."""
    ids = graph.ids()
    index = {v: k for k, v in enumerate(ids)}
    edges = graph.sorted_edges()
    for subset in itertools.combinations(edges, graph.n - 1):
        root = list(range(graph.n))

        def find(x):
            while root[x] != x:
                root[x] = root[root[x]]
                x = root[x]
            return x

        ok = True
        for a, b in subset:
            ra, rb = find(index[a]), find(index[b])
            if ra == rb:
                ok = False
                break
            root[ra] = rb
        if not ok:
            continue
        adj = {v: [] for v in ids}
        for a, b in subset:
            adj[a].append(b)
            adj[b].append(a)
        parent, queue = {}, deque([graph.v0])
        seen = {graph.v0}
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    parent[w] = v
                    queue.append(w)
        yield parent


def size_cap_default() -> int:
    return int(os.environ.get("TOURPATROL_SIZE_CAP", DEFAULT_SIZE_CAP))


def brute_force_optimal(graph: TourGraph, fixed_directions: Optional[Mapping] = None,
                        cap: Optional[int] = None) -> SolveResult:
    """Exact minimum worst delay over all spanning trees (and directions).

    Trees are grown from ``v0`` by including or excluding frontier edges, which
    visits every spanning tree once.  A tour's data delay is fixed the moment
    it is attached, so partial trees already worse than the incumbent are cut.
    Among equally good trees the first one in this search order is returned.
    """
    cap = size_cap_default() if cap is None else cap
    if graph.n > cap:
        raise SizeCapError(f"instance has {graph.n} tours, exhaustive search is capped at {cap}")
    _require_connected(graph)
    fixed = None if fixed_directions is None else {v: Direction(d) for v, d in fixed_directions.items()}
    adj = graph.adjacency()
    tours = graph.tours
    v0 = graph.v0
    # heuristic trees give an initial bound for pruning
    bound = math.inf
    for heuristic in (mdtd_sp, mdtd_cg):
        tree = heuristic(graph).tree
        dirs = fixed if fixed else minimum_delay_schedule(tree)[0].direction
        bound = min(bound, evaluate_tree_delay(tree, dirs).worst_delay)
    best = {"wd": bound, "parent": None}

    def to_base(v, q, state):
        # delay from position q on tour v to the base station
        d = state["dir"][v]
        start = state["start"][v]
        return travel_time(tours[v], q, start, d) + state["offset"][v]

    def root_dirs():
        return [fixed[v0]] if fixed else list(BOTH_DIRECTIONS)

    def attach_dirs(w):
        return [fixed[w]] if fixed else list(BOTH_DIRECTIONS)

    def record(state, wd):
        if best["parent"] is None or wd < best["wd"] - TOL:
            best.update(wd=wd, parent=dict(state["parent"]))

    def hopeless(value):
        # before any tree is found the heuristic bound itself is acceptable
        if best["parent"] is None:
            return value > best["wd"] + TOL
        return value >= best["wd"] - TOL

    def grow(state, frontier, wd):
        if len(state["parent"]) == graph.n - 1:
            record(state, wd)
            return
        if not frontier:
            return
        (u, w), rest = frontier[0], frontier[1:]
        # include u -> w
        meet_u = tours[u].meet(w)
        base_part = to_base(u, meet_u, state)
        new_frontier = [e for e in rest if e[1] != w]
        new_frontier += [(w, y) for y in adj[w] if y not in state["in"] and (w, y) not in state["ban"]
                         and (y, w) not in state["ban"]]
        for d in attach_dirs(w):
            own = own_delay(tours[w], tours[w].meet(u), d)
            value = max(wd, own + base_part) if own > -math.inf else wd
            if hopeless(value):
                continue
            state["parent"][w] = u
            state["in"].add(w)
            state["dir"][w] = d
            state["start"][w] = tours[w].meet(u)
            state["offset"][w] = base_part
            grow(state, new_frontier, value)
            del state["parent"][w]
            state["in"].discard(w)
        # exclude u -> w
        state["ban"].add((u, w))
        grow(state, rest, wd)
        state["ban"].discard((u, w))

    for d in root_dirs():
        base = tours[v0].base_position
        own = own_delay(tours[v0], base, d)
        state = {"parent": {}, "in": {v0}, "dir": {v0: d}, "start": {v0: base},
                 "offset": {v0: 0.0}, "ban": set()}
        frontier = [(v0, y) for y in adj[v0]]
        grow(state, frontier, max(own, 0.0))
    if best["parent"] is None:
        raise StructureError("no spanning tree found")
    tree = TourTree(graph, best["parent"])
    if fixed:
        return _finish(tree, fixed, "OPT")
    schedule, _ = minimum_delay_schedule(tree)
    return _finish(tree, schedule.direction, "OPT")


def solve(graph: TourGraph, method: str, **kwargs) -> SolveResult:
    method = method.lower()
    if method == "sp":
        return mdtd_sp(graph)
    if method == "cg":
        return mdtd_cg(graph)
    if method == "opt":
        return brute_force_optimal(graph, **kwargs)
    raise ValueError(f"unknown method {method!r}")
