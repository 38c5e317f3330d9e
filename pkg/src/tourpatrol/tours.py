"""Tours, tour graphs and tour trees.

A tour is an abstract closed 1-D curve of a given length.  Positions are
real coordinates in ``[0, length)`` that increase in the counterclockwise
direction; moving clockwise decreases them.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Hashable, Iterable, Mapping, Optional

TOL = 1e-9

TourId = Hashable


class DomainError(ValueError):
    """A position or argument lies outside the domain of an operation."""


class StructureError(ValueError):
    """A graph or tree does not have the required structure."""


class Direction(str, enum.Enum):
    CW = "cw"
    CCW = "ccw"

    @property
    def opposite(self) -> "Direction":
        return Direction.CCW if self is Direction.CW else Direction.CW


BOTH_DIRECTIONS = (Direction.CW, Direction.CCW)


def idkey(v):
    """Sort key that tolerates a mix of integer and string tour ids."""
    return (isinstance(v, str), v)


def sorted_ids(ids: Iterable[TourId]) -> list:
    return sorted(ids, key=idkey)


def edge_key(a: TourId, b: TourId) -> tuple:
    return (a, b) if idkey(a) <= idkey(b) else (b, a)


def _normalize_arcs(arcs, length):
    pieces = []
    for a, b in arcs:
        a, b = float(a), float(b)
        if not (-TOL <= a <= length + TOL and -TOL <= b <= length + TOL):
            raise DomainError(f"sensing arc ({a}, {b}) outside [0, {length}]")
        a = min(max(a, 0.0), length)
        b = min(max(b, 0.0), length)
        if a < b:
            pieces.append((a, b))
        elif a > b:
            # wraps through the origin
            pieces.append((a, length))
            if b > 0:
                pieces.append((0.0, b))
    pieces.sort()
    merged: list[list[float]] = []
    for a, b in pieces:
        if merged and a <= merged[-1][1] + TOL:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


@dataclass(frozen=True)
class Tour:
    """One robot's closed tour.

    ``sensing_arcs=None`` means the whole tour senses; an empty tuple makes
    the tour relay-only.  ``sensing_points`` replaces the arcs by a finite
    set of sensing locations (used by grid scenarios, one point per cell).
    """

    id: TourId
    length: float
    sensing_arcs: Optional[tuple] = None
    meeting_positions: Mapping[TourId, float] = field(default_factory=dict)
    base_position: Optional[float] = None
    sensing_points: Optional[tuple] = None

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise DomainError(f"tour {self.id!r}: length must be positive, got {self.length}")
        length = float(self.length)
        object.__setattr__(self, "length", length)
        if self.sensing_points is not None:
            pts = tuple(sorted({self._check(p) for p in self.sensing_points}))
            object.__setattr__(self, "sensing_points", pts)
            object.__setattr__(self, "sensing_arcs", ())
        else:
            arcs = ((0.0, length),) if self.sensing_arcs is None else self.sensing_arcs
            object.__setattr__(self, "sensing_arcs", _normalize_arcs(arcs, length))
        meet = {w: self._check(p) for w, p in dict(self.meeting_positions).items()}
        object.__setattr__(self, "meeting_positions", meet)
        if self.base_position is not None:
            object.__setattr__(self, "base_position", self._check(self.base_position))

    def _check(self, p: float) -> float:
        p = float(p)
        if not (0.0 <= p < self.length):
            raise DomainError(f"position {p} outside [0, {self.length}) on tour {self.id!r}")
        return p

    @property
    def senses(self) -> bool:
        return bool(self.sensing_points) or bool(self.sensing_arcs)

    @property
    def fully_sensed(self) -> bool:
        return self.sensing_arcs == ((0.0, self.length),)

    def meet(self, other: TourId) -> float:
        try:
            return self.meeting_positions[other]
        except KeyError:
            raise StructureError(f"tour {self.id!r} has no meeting position with {other!r}") from None

    def is_sensed(self, p: float) -> bool:
        if self.sensing_points is not None:
            return any(abs(p - x) <= TOL for x in self.sensing_points)
        return any(a <= p < b for a, b in self.sensing_arcs)

    def with_meetings(self, meetings: Mapping[TourId, float]) -> "Tour":
        return replace(self, meeting_positions=dict(meetings))


def travel_time(tour: Tour, p: float, q: float, d: Direction) -> float:
    """Time to move from ``p`` to ``q`` on ``tour`` in direction ``d``."""
    p, q = tour._check(p), tour._check(q)
    t = (q - p) % tour.length if d is Direction.CCW else (p - q) % tour.length
    if t > tour.length - TOL or t < TOL:
        return 0.0
    return t


def loop_offset(tour: Tour, p: float, q: float, d: Direction) -> float:
    """Like :func:`travel_time` but in ``(0, length]``: coincident points are a full loop apart."""
    t = travel_time(tour, p, q, d)
    return tour.length if t == 0.0 else t


def shorter_arc(tour: Tour, p: float, q: float) -> tuple[float, Direction]:
    """Shorter arc length from ``p`` to ``q`` and its direction (ties go CCW)."""
    ccw = travel_time(tour, p, q, Direction.CCW)
    cw = travel_time(tour, p, q, Direction.CW)
    if cw < ccw - TOL:
        return cw, Direction.CW
    return ccw, Direction.CCW


def first_sensing_offset(tour: Tour, p: float, d: Direction) -> float:
    """Least travel time from ``p`` in direction ``d`` until a sensing location.

    Arcs are half-open ``[a, b)`` in the CCW sense; moving clockwise the arc is
    entered just below ``b``, so the infimum ``(p - b) mod length`` is returned.
    """
    p = tour._check(p)
    if not tour.senses:
        raise DomainError(f"tour {tour.id!r} has no sensing locations")
    L = tour.length
    if tour.sensing_points is not None:
        if d is Direction.CCW:
            best = min((x - p) % L for x in tour.sensing_points)
        else:
            best = min((p - x) % L for x in tour.sensing_points)
        return 0.0 if best > L - TOL or best < TOL else best
    if tour.is_sensed(p):
        return 0.0
    if d is Direction.CCW:
        best = min((a - p) % L for a, _ in tour.sensing_arcs)
    else:
        best = min((p - b) % L for _, b in tour.sensing_arcs)
    return 0.0 if best > L - TOL else best


def own_delay(tour: Tour, start: float, d: Direction) -> float:
    """Worst delay of a tour's own data until it is back at ``start``.

    ``-inf`` for relay-only tours, which produce no data.
    """
    if not tour.senses:
        return -math.inf
    return tour.length - first_sensing_offset(tour, start, d)


@dataclass(frozen=True)
class TourGraph:
    tours: Mapping[TourId, Tour]
    edges: frozenset
    v0: TourId

    def __post_init__(self):
        object.__setattr__(self, "tours", dict(self.tours))
        object.__setattr__(self, "edges", frozenset(edge_key(a, b) for a, b in self.edges))

    @classmethod
    def from_tours(cls, tours: Iterable[Tour], v0: TourId) -> "TourGraph":
        """Build a graph whose edges are the mutually declared meeting positions."""
        tours = {t.id: t for t in tours}
        edges = set()
        for t in tours.values():
            for w in t.meeting_positions:
                if w in tours and t.id in tours[w].meeting_positions:
                    edges.add(edge_key(t.id, w))
        return cls(tours, frozenset(edges), v0)

    @property
    def n(self) -> int:
        return len(self.tours)

    def ids(self) -> list:
        return sorted_ids(self.tours)

    def neighbors(self, v: TourId) -> list:
        out = [b if a == v else a for a, b in self.edges if v in (a, b)]
        return sorted_ids(out)

    def adjacency(self) -> dict:
        adj = {v: [] for v in self.tours}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {v: sorted_ids(ws) for v, ws in adj.items()}

    def sorted_edges(self) -> list:
        return sorted(self.edges, key=lambda e: (idkey(e[0]), idkey(e[1])))

    def hop_distances(self) -> dict:
        adj = self.adjacency()
        dist = {self.v0: 0}
        queue = deque([self.v0])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    def depth_sp(self) -> int:
        """Largest hop distance from any tour to the base-station tour."""
        dist = self.hop_distances()
        if len(dist) != self.n:
            raise StructureError("tour graph is disconnected")
        return max(dist.values())

    def is_connected(self) -> bool:
        return self.v0 in self.tours and len(self.hop_distances()) == self.n

    def require_valid(self) -> None:
        problems = validate(self)
        if problems:
            raise StructureError("; ".join(problems))


def validate(graph: TourGraph) -> list[str]:
    """List every violated tour-graph invariant; empty when the graph is valid."""
    problems = []
    if graph.v0 not in graph.tours:
        return [f"base-station tour {graph.v0!r} is not a tour"]
    if graph.tours[graph.v0].base_position is None:
        problems.append(f"base-station tour {graph.v0!r} has no base position")
    for v, t in graph.tours.items():
        if t.id != v:
            problems.append(f"tour keyed {v!r} carries id {t.id!r}")
        if v != graph.v0 and t.base_position is not None:
            problems.append(f"tour {v!r} has a base position but is not the base-station tour")
    for a, b in graph.sorted_edges():
        for x, y in ((a, b), (b, a)):
            if x not in graph.tours:
                problems.append(f"edge ({a!r}, {b!r}) references unknown tour {x!r}")
            elif y not in graph.tours[x].meeting_positions:
                problems.append(f"edge ({a!r}, {b!r}): tour {x!r} has no meeting position for {y!r}")
    for v in graph.ids():
        for w in graph.tours[v].meeting_positions:
            if edge_key(v, w) not in graph.edges:
                problems.append(f"tour {v!r} has a meeting position for {w!r} but no edge exists")
    if all(a in graph.tours and b in graph.tours for a, b in graph.edges):
        reached = graph.hop_distances()
        missing = [v for v in graph.ids() if v not in reached]
        if missing:
            problems.append(f"tours {missing!r} are unreachable from {graph.v0!r}")
    return problems


@dataclass(frozen=True)
class TourTree:
    """Spanning tree of a tour graph with every arc directed toward ``v0``."""

    graph: TourGraph
    parent: Mapping[TourId, TourId]

    def __post_init__(self):
        parent = dict(self.parent)
        object.__setattr__(self, "parent", parent)
        g = self.graph
        if g.v0 in parent:
            raise StructureError("the base-station tour cannot have a parent")
        if set(parent) != set(g.tours) - {g.v0}:
            missing = sorted_ids(set(g.tours) - {g.v0} - set(parent))
            raise StructureError(f"tours without parent: {missing!r}")
        for c, p in parent.items():
            if edge_key(c, p) not in g.edges:
                raise StructureError(f"arc ({c!r}, {p!r}) is not an edge of the graph")
        for v in parent:
            seen = set()
            while v != g.v0:
                if v in seen:
                    raise StructureError("tree arcs contain a cycle")
                seen.add(v)
                v = parent[v]
        # keep only the meeting positions of tree edges
        keep = {v: set() for v in g.tours}
        for c, p in parent.items():
            keep[c].add(p)
            keep[p].add(c)
        tours = {
            v: t.with_meetings({w: x for w, x in t.meeting_positions.items() if w in keep[v]})
            for v, t in g.tours.items()
        }
        edges = frozenset(edge_key(c, p) for c, p in parent.items())
        object.__setattr__(self, "graph", TourGraph(tours, edges, g.v0))
        kids = {v: [] for v in g.tours}
        for c, p in parent.items():
            kids[p].append(c)
        object.__setattr__(self, "_children", {v: sorted_ids(ws) for v, ws in kids.items()})

    @classmethod
    def from_arcs(cls, graph: TourGraph, arcs: Iterable[tuple]) -> "TourTree":
        parent = {}
        for c, p in arcs:
            if c in parent:
                raise StructureError(f"tour {c!r} has two parents")
            parent[c] = p
        return cls(graph, parent)

    @property
    def v0(self):
        return self.graph.v0

    @property
    def tours(self):
        return self.graph.tours

    @property
    def arcs(self) -> frozenset:
        return frozenset(self.parent.items())

    def children(self, v: TourId) -> list:
        return self._children[v]

    def start_position(self, v: TourId) -> float:
        t = self.tours[v]
        if v == self.v0:
            if t.base_position is None:
                raise StructureError("root tour has no base position")
            return t.base_position
        return t.meet(self.parent[v])

    def preorder(self) -> list:
        order, stack = [], [self.v0]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children(v)))
        return order

    def depth(self) -> int:
        """Number of arcs on the longest path to the root."""
        level = {self.v0: 0}
        for v in self.preorder():
            for w in self.children(v):
                level[w] = level[v] + 1
        return max(level.values())

    def edge_set(self) -> tuple:
        return tuple(sorted((edge_key(c, p) for c, p in self.parent.items()),
                            key=lambda e: (idkey(e[0]), idkey(e[1]))))


@dataclass(frozen=True)
class TourMultiGraph:
    """Tours with several candidate meeting points per tour pair.

    ``candidates[(a, b)]`` (keys in ``edge_key`` order) lists position pairs
    ``(position on a, position on b)``.  Meeting positions stored on the
    tours themselves are ignored.
    """

    tours: Mapping[TourId, Tour]
    candidates: Mapping[tuple, list]
    v0: TourId

    def __post_init__(self):
        object.__setattr__(self, "tours", dict(self.tours))
        cands = {}
        for (a, b), lst in self.candidates.items():
            key = edge_key(a, b)
            pairs = [(float(p), float(q)) if key == (a, b) else (float(q), float(p)) for p, q in lst]
            if not pairs:
                raise StructureError(f"pair {key!r} has an empty candidate list")
            for p, q in pairs:
                self.tours[key[0]]._check(p)
                self.tours[key[1]]._check(q)
            cands[key] = pairs
        object.__setattr__(self, "candidates", cands)

    @property
    def edges(self) -> frozenset:
        return frozenset(self.candidates)

    def skeleton(self) -> TourGraph:
        """The underlying simple graph (without meeting positions)."""
        tours = {v: t.with_meetings({}) for v, t in self.tours.items()}
        return TourGraph(tours, self.edges, self.v0)

    def is_connected(self) -> bool:
        return self.skeleton().is_connected()

    def resolve(self, chosen: Mapping[tuple, int]) -> TourGraph:
        """Tour graph using candidate ``chosen[pair]`` for every pair."""
        meet = {v: {} for v in self.tours}
        for key, idx in chosen.items():
            a, b = key
            p, q = self.candidates[key][idx]
            meet[a][b] = p
            meet[b][a] = q
        tours = {v: t.with_meetings(meet[v]) for v, t in self.tours.items()}
        return TourGraph(tours, frozenset(chosen), self.v0)
