"""Greedy choice of one meeting point per tour pair.

Tours are visited breadth-first from the base-station tour.  For every
pair not yet resolved, the candidate with the shortest route to the base
station (through meeting points chosen so far) is kept.  Choices are never
revised.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

from .tours import TOL, StructureError, TourGraph, TourMultiGraph, edge_key, shorter_arc, sorted_ids


@dataclass
class SelectionTrace:
    order: list = field(default_factory=list)
    chosen: dict = field(default_factory=dict)
    rationale: dict = field(default_factory=dict)
    candidate_distances: dict = field(default_factory=dict)


class _PartialConverted:
    """Converted graph over the meeting points chosen so far."""

    def __init__(self, mg: TourMultiGraph):
        self.mg = mg
        base = mg.tours[mg.v0].base_position
        if base is None:
            raise StructureError("base-station tour has no base position")
        # point id -> {tour: position}
        self.points = [{mg.v0: base}]
        self.on_tour = {v: [] for v in mg.tours}
        self.on_tour[mg.v0].append(0)
        self.dist = [0.0]

    def route_length(self, positions: dict) -> float:
        best = math.inf
        for v, p in positions.items():
            tour = self.mg.tours[v]
            for i in self.on_tour[v]:
                w, _ = shorter_arc(tour, self.points[i][v], p)
                best = min(best, self.dist[i] + w)
        return best

    def add(self, positions: dict) -> None:
        idx = len(self.points)
        self.points.append(dict(positions))
        for v in positions:
            self.on_tour[v].append(idx)
        self._recompute()

    def _recompute(self) -> None:
        n = len(self.points)
        dist = [math.inf] * n
        dist[0] = 0.0
        heap = [(0.0, 0)]
        while heap:
            d, i = heapq.heappop(heap)
            if d > dist[i]:
                continue
            for v, p in self.points[i].items():
                tour = self.mg.tours[v]
                for j in self.on_tour[v]:
                    if j == i:
                        continue
                    w, _ = shorter_arc(tour, p, self.points[j][v])
                    if d + w < dist[j]:
                        dist[j] = d + w
                        heapq.heappush(heap, (d + w, j))
        self.dist = dist


def select_meeting_points(mg: TourMultiGraph) -> tuple[TourGraph, SelectionTrace]:
    if not mg.is_connected():
        raise StructureError("tour multigraph is disconnected")
    adj = {v: [] for v in mg.tours}
    for a, b in mg.candidates:
        adj[a].append(b)
        adj[b].append(a)
    partial = _PartialConverted(mg)
    trace = SelectionTrace()
    seen = {mg.v0}
    queue = deque([mg.v0])
    while queue:
        v = queue.popleft()
        trace.order.append(v)
        for w in sorted_ids(adj[v]):
            key = edge_key(v, w)
            if key not in trace.chosen:
                a, b = key
                dists = [partial.route_length({a: p, b: q}) for p, q in mg.candidates[key]]
                # ties: smaller position on the lower-id tour, then on the other tour
                low = min(dists)
                near = [i for i, d in enumerate(dists) if d <= low + TOL]
                idx = min(near, key=lambda i: mg.candidates[key][i])
                trace.chosen[key] = idx
                trace.rationale[key] = dists[idx]
                trace.candidate_distances[key] = dists
                p, q = mg.candidates[key][idx]
                partial.add({a: p, b: q})
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return mg.resolve(trace.chosen), trace
