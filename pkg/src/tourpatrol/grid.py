"""Grid-world scenarios: tours over cells, splitting, candidate meetings, detours.

Cells are ``(x, y)`` pairs with ``(0, 0)`` in the lower-left corner.  A robot
moves to any of the 8 neighbouring free cells in one time unit, so free-space
distances are 8-connected shortest paths (Chebyshev distance without
obstacles).
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .simulator import SingleHopRoute
from .tours import DomainError, StructureError, Tour, TourMultiGraph

Cell = tuple

_NEIGHBOURS = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]


@dataclass(frozen=True)
class GridScenario:
    width: int
    height: int
    obstacles: frozenset = frozenset()
    base_cell: Cell = (0, 0)
    rcom: int = 1
    n: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DomainError("grid needs at least one cell")
        object.__setattr__(self, "obstacles", frozenset(tuple(c) for c in self.obstacles))
        object.__setattr__(self, "base_cell", tuple(self.base_cell))
        if not self.inside(self.base_cell) or self.base_cell in self.obstacles:
            raise DomainError(f"base cell {self.base_cell} must be a free cell of the grid")
        if self.rcom < 0:
            raise DomainError("communication range must be non-negative")

    def inside(self, c: Cell) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def is_free(self, c: Cell) -> bool:
        return self.inside(c) and c not in self.obstacles

    def free_cells(self) -> list:
        return [(x, y) for y in range(self.height) for x in range(self.width) if (x, y) not in self.obstacles]


class GridMetric:
    """All-pairs 8-connected shortest paths over the free cells."""

    def __init__(self, grid: GridScenario):
        self.grid = grid
        self.cells = grid.free_cells()
        self.index = {c: i for i, c in enumerate(self.cells)}
        rows, cols = [], []
        for i, (x, y) in enumerate(self.cells):
            for dx, dy in _NEIGHBOURS:
                j = self.index.get((x + dx, y + dy))
                if j is not None:
                    rows.append(i)
                    cols.append(j)
        n = len(self.cells)
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
        dist, pred = shortest_path(adj, method="D", unweighted=True, return_predecessors=True)
        if np.isinf(dist).any():
            raise StructureError("free cells are not 8-connected")
        self.dist = dist.astype(np.int64)
        self.pred = pred

    def d(self, a: Cell, b: Cell) -> int:
        return int(self.dist[self.index[a], self.index[b]])

    def path(self, a: Cell, b: Cell) -> list:
        """Cells of a shortest path from ``a`` to ``b``, both included."""
        i, j = self.index[a], self.index[b]
        out = [j]
        while out[-1] != i:
            out.append(int(self.pred[i, out[-1]]))
        return [self.cells[k] for k in reversed(out)]


@dataclass(frozen=True)
class GrandTour:
    """Closed cell walk; consecutive cells (and last to first) are 8-adjacent."""

    cells: tuple

    @property
    def length(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class SubTour:
    """A robot's closed cell walk; ``sensing[i]`` marks where data is captured."""

    id: int
    walk: tuple
    sensing: tuple = field(default=None)

    def __post_init__(self):
        if self.sensing is None:
            object.__setattr__(self, "sensing", tuple(True for _ in self.walk))

    @property
    def length(self) -> int:
        return len(self.walk)


def check_walk(grid: GridScenario, walk: Sequence[Cell]) -> None:
    """Raise if ``walk`` is not a closed 8-connected obstacle-free cycle."""
    if len(walk) < 2:
        raise StructureError("a closed walk needs at least two cells")
    for k, c in enumerate(walk):
        nxt = walk[(k + 1) % len(walk)]
        if not grid.is_free(c):
            raise StructureError(f"cell {c} is blocked or outside the grid")
        if max(abs(c[0] - nxt[0]), abs(c[1] - nxt[1])) != 1:
            raise StructureError(f"cells {c} and {nxt} are not neighbours")


# --- grand tour ---------------------------------------------------------------

def _nearest_neighbour(D: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Greedy tour from index 0; ties between equally near cells are broken by ``rng``."""
    n = D.shape[0]
    order = [0]
    left = np.ones(n, dtype=bool)
    left[0] = False
    for _ in range(n - 1):
        row = np.where(left, D[order[-1]], np.iinfo(np.int64).max)
        ties = np.flatnonzero(row == row.min())
        nxt = int(ties[rng.integers(len(ties))]) if len(ties) > 1 else int(ties[0])
        order.append(nxt)
        left[nxt] = False
    return np.asarray(order)


def _two_opt(order: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Best-improvement 2-opt sweeps; position 0 stays fixed."""
    t = order.copy()
    n = len(t)
    if n < 4:
        return t
    improved = True
    while improved:
        improved = False
        for i in range(n - 2):
            a, b = t[i], t[i + 1]
            js = np.arange(i + 2, n)
            c = t[js]
            d = t[(js + 1) % n]
            gain = D[a, b] + D[c, d] - D[a, c] - D[b, d]
            if i == 0:
                gain[-1] = 0  # edge (t[n-1], t[0]) is adjacent to (t[0], t[1])
            k = int(np.argmax(gain))
            if gain[k] > 0:
                j = int(js[k])
                t[i + 1:j + 1] = t[i + 1:j + 1][::-1].copy()
                improved = True
    return t


def _tour_cost(order: np.ndarray, D: np.ndarray) -> int:
    return int(D[order, np.roll(order, -1)].sum())


def _double_bridge(order: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(order)
    if n < 8:
        return order.copy()
    p = np.sort(rng.choice(np.arange(1, n), size=3, replace=False))
    return np.concatenate([order[:p[0]], order[p[2]:], order[p[1]:p[2]], order[p[0]:p[1]]])


def grand_tour(grid: GridScenario, metric: Optional[GridMetric] = None,
               sensing_cells: Optional[Sequence[Cell]] = None, restarts: int = 2) -> GrandTour:
    """Closed walk through every sensing cell and the base (nearest neighbour + 2-opt).

    Gaps between consecutive cells are bridged with shortest grid paths.
    Nearest-neighbour ties and ``restarts`` perturbed 2-opt runs draw from
    ``grid.rng_seed``; the cheapest tour found is kept.
    """
    metric = metric or GridMetric(grid)
    cells = list(sensing_cells) if sensing_cells is not None else metric.cells
    cells = [grid.base_cell] + [c for c in dict.fromkeys(cells) if c != grid.base_cell]
    idx = np.asarray([metric.index[c] for c in cells])
    D = metric.dist[np.ix_(idx, idx)]
    rng = np.random.default_rng(grid.rng_seed)
    best = _two_opt(_nearest_neighbour(D, rng), D)
    best_cost = _tour_cost(best, D)
    for _ in range(restarts):
        cand = _two_opt(_double_bridge(best, rng), D)
        cost = _tour_cost(cand, D)
        if cost < best_cost:
            best, best_cost = cand, cost
    walk = []
    for k in range(len(best)):
        a, b = cells[best[k]], cells[best[(k + 1) % len(best)]]
        walk.extend(metric.path(a, b)[:-1] if a != b else [])
    if not walk:
        walk = [grid.base_cell]
    return GrandTour(tuple(walk))


# --- splitting ------------------------------------------------------------------

def split_points(tour: GrandTour, k: int, metric: GridMetric) -> list:
    """Indices ending each of the first ``k - 1`` segments (cost-balancing rule).

    Segment ``j`` ends at the last cell whose walk distance from the start is at
    most ``(j / k) * (L - 2 c_max) + c_max``, where ``c_max`` is the largest
    distance from the start cell to any cell of the walk.
    """
    L = tour.length
    start = tour.cells[0]
    c_max = max(metric.d(start, c) for c in tour.cells)
    ends = []
    for j in range(1, k):
        limit = (j / k) * (L - 2 * c_max) + c_max
        ends.append(min(max(int(np.floor(limit + 1e-9)), 0), L - 1))
    return ends


def close_segment(cells: Sequence[Cell], metric: GridMetric) -> tuple:
    """Close a cell segment into a cycle through a shortest path back to its first cell."""
    cells = list(cells)
    if len(cells) > 1 and cells[-1] == cells[0]:
        cells = cells[:-1]
    back = metric.path(cells[-1], cells[0])[1:-1] if cells[-1] != cells[0] else []
    return tuple(cells), tuple(back)


def k_splitour(tour: GrandTour, k: int, metric: GridMetric) -> list:
    """Split a grand tour (starting at the base) into ``k`` closed sub-tours.

    Segments with fewer than two cells are merged into their predecessor
    (the first segment absorbs its successor instead).  Sub-tour 0 contains
    the base cell.
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    if k > tour.length:
        raise DomainError(f"k={k} exceeds the tour length {tour.length}")
    if k == 1:
        return [SubTour(0, tour.cells)] if tour.length > 1 else [SubTour(0, tour.cells * 2)]
    bounds = [0] + [e + 1 for e in split_points(tour, k, metric)] + [tour.length]
    segs = [list(tour.cells[bounds[i]:bounds[i + 1]]) for i in range(k)]
    merged: list = []
    for seg in segs:
        if merged and len(seg) < 2:
            merged[-1].extend(seg)
        else:
            merged.append(seg)
    if len(merged) > 1 and len(merged[0]) < 2:
        merged[1][:0] = merged.pop(0)
    out = []
    for i, seg in enumerate(merged):
        body, back = close_segment(seg, metric)
        if len(body) + len(back) < 2:
            body = body * 2
        out.append(SubTour(i, body + back, tuple([True] * len(body) + [False] * len(back))))
    return out


# --- meetings -------------------------------------------------------------------

def line_of_sight(grid: GridScenario, a: Cell, b: Cell) -> bool:
    """True if the Bresenham line between cell centres avoids obstacle cells."""
    if not grid.obstacles:
        return True
    x0, y0 = a
    x1, y1 = b
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    while True:
        if (x0, y0) in grid.obstacles:
            return False
        if (x0, y0) == (x1, y1):
            return True
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def subtours_to_tours(subtours: Sequence[SubTour], grid: GridScenario) -> list:
    tours = []
    for st in subtours:
        base = None
        if st.id == 0:
            base = float(st.walk.index(grid.base_cell))
        pts = tuple(float(i) for i, s in enumerate(st.sensing) if s)
        tours.append(Tour(st.id, float(st.length), (), {}, base, pts or None))
    return tours


def candidate_meetings(subtours: Sequence[SubTour], grid: GridScenario, rcom: Optional[int] = None,
                       require_connected: bool = True) -> TourMultiGraph:
    """Every pair of walk positions within ``rcom`` (Chebyshev) and in line of sight."""
    rcom = grid.rcom if rcom is None else rcom
    coords = {st.id: np.asarray(st.walk, dtype=np.int64).reshape(-1, 2) for st in subtours}
    cands = {}
    ids = [st.id for st in subtours]
    for ia, a in enumerate(ids):
        for b in ids[ia + 1:]:
            ca, cb = coords[a], coords[b]
            cheb = np.maximum(np.abs(ca[:, None, 0] - cb[None, :, 0]), np.abs(ca[:, None, 1] - cb[None, :, 1]))
            pa, pb = np.nonzero(cheb <= rcom)
            lst = [(float(i), float(j)) for i, j in zip(pa.tolist(), pb.tolist())
                   if line_of_sight(grid, tuple(ca[i]), tuple(cb[j]))]
            if lst:
                cands[(a, b)] = lst
    tours = subtours_to_tours(subtours, grid)
    mg = TourMultiGraph({t.id: t for t in tours}, cands, 0)
    if require_connected and not mg.is_connected():
        raise StructureError("candidate meetings leave the tours disconnected")
    return mg


# --- single-hop detours ---------------------------------------------------------

@dataclass(frozen=True)
class DetourPlan:
    routes: tuple
    detours: dict
    forced: frozenset


def communication_cells(grid: GridScenario, rcom: Optional[int] = None) -> frozenset:
    """Free cells from which a robot can transmit straight to the base station."""
    rcom = grid.rcom if rcom is None else rcom
    bx, by = grid.base_cell
    return frozenset(
        (x, y)
        for x in range(bx - rcom, bx + rcom + 1)
        for y in range(by - rcom, by + rcom + 1)
        if grid.is_free((x, y)) and line_of_sight(grid, (x, y), grid.base_cell)
    )


def _route_with_detours(st: SubTour, metric: GridMetric, sites: frozenset, j: int):
    m = st.length
    site_list = sorted(sites)

    def nearest(c):
        return min(site_list, key=lambda s: (metric.d(c, s), s))

    dists = [metric.d(c, nearest(c)) for c in st.walk]
    i0 = int(np.argmin(dists))
    spots = sorted({(i0 + int(round(i * m / j))) % m for i in range(j)})
    cells, sensing, inserted = [], [], 0
    for step in range(m):
        p = (i0 + step) % m
        cells.append(st.walk[p])
        sensing.append(st.sensing[p])
        if p in spots and st.walk[p] not in sites:
            inserted += 1
            out = metric.path(st.walk[p], nearest(st.walk[p]))
            cells.extend(out[1:])
            cells.extend(list(reversed(out))[1:])
            sensing.extend([False] * (len(out) - 1))
            sensing.extend([False] * (len(out) - 2) + [st.sensing[p]])
    return cells, sensing, inserted


def detour_cost(st: SubTour, grid: GridScenario, metric: GridMetric, j: int,
                delivery_range: Optional[int] = None) -> int:
    cells, _, _ = _route_with_detours(st, metric, communication_cells(grid, delivery_range), j)
    return len(cells) - st.length


def single_hop_tours(subtours: Sequence[SubTour], grid: GridScenario, budget: Optional[float] = None,
                     metric: Optional[GridMetric] = None, cooperative_wi: float = 0.0,
                     delivery_range: Optional[int] = None) -> DetourPlan:
    """Add evenly spread detours to every sub-tour while the length stays within ``budget``.

    A robot delivers whenever it stands on a communication cell, i.e. within
    ``delivery_range`` (default ``grid.rcom``) of the base and in line of
    sight; a detour is a shortest path to the nearest such cell and back.
    The default budget is the larger of ``cooperative_wi`` and the longest
    sub-tour with one detour.  At least one detour is always inserted; a
    route that exceeds the budget because of it is listed in ``forced``.
    ``detours`` counts the detours actually inserted: spots that already lie
    on a communication cell need none.
    """
    metric = metric or GridMetric(grid)
    sites = communication_cells(grid, delivery_range)
    if budget is None:
        budget = max([cooperative_wi] + [len(_route_with_detours(st, metric, sites, 1)[0]) for st in subtours])
    routes, detours, forced = [], {}, set()
    for st in subtours:
        j = 1
        while j < st.length and len(_route_with_detours(st, metric, sites, j + 1)[0]) <= budget:
            j += 1
        cells, sensing, inserted = _route_with_detours(st, metric, sites, j)
        if len(cells) > budget:
            forced.add(st.id)
        base_offsets = tuple(float(i) for i, c in enumerate(cells) if c in sites)
        if not base_offsets:
            raise StructureError(f"tour {st.id} cannot reach the base: unbounded delay")
        sense = tuple(float(i) for i, s in enumerate(sensing) if s)
        routes.append(SingleHopRoute(st.id, float(len(cells)), sense, base_offsets))
        detours[st.id] = inserted
    return DetourPlan(tuple(routes), detours, frozenset(forced))


# --- complete instances -----------------------------------------------------------

@dataclass
class GridInstance:
    grid: GridScenario
    subtours: list
    multigraph: TourMultiGraph
    metric: GridMetric = field(repr=False, default=None)


def build_grid_instance(grid: GridScenario, restarts: int = 2, metric: Optional[GridMetric] = None,
                        tour: Optional[GrandTour] = None) -> GridInstance:
    """Grand tour, ``grid.n`` sub-tours and their candidate meetings.

    ``metric`` and ``tour`` may be passed in to reuse them across robot counts.
    """
    metric = metric or GridMetric(grid)
    tour = tour or grand_tour(grid, metric, restarts=restarts)
    subtours = k_splitour(tour, grid.n, metric)
    mg = candidate_meetings(subtours, grid)
    return GridInstance(grid, subtours, mg, metric)


def _ring(x0: int, y0: int, w: int, h: int) -> list:
    """Counterclockwise ring of a ``w`` x ``h`` block starting at its lower-left cell."""
    ring = [(x, y0) for x in range(x0, x0 + w)]
    ring += [(x0 + w - 1, y) for y in range(y0 + 1, y0 + h)]
    ring += [(x, y0 + h - 1) for x in range(x0 + w - 2, x0 - 1, -1)]
    ring += [(x0, y) for y in range(y0 + h - 2, y0, -1)]
    return ring


def corridor_scenario() -> GridInstance:
    """20 x 40 corridor: two rows of four ring tours (30 cells each).

    A wall between the rows leaves only the left end open, so data and
    detours from the upper right have to travel the whole corridor.
    """
    wall = frozenset((x, 9) for x in range(10, 40)) | frozenset((x, 8) for x in range(10, 40))
    grid = GridScenario(40, 20, wall, (0, 0), rcom=3, n=8, rng_seed=0)
    metric = GridMetric(grid)
    subtours = []
    k = 0
    for row in (0, 10):
        for col in range(4):
            subtours.append(SubTour(k, tuple(_ring(10 * col, row, 9, 8))))
            k += 1
    mg = candidate_meetings(subtours, grid)
    return GridInstance(grid, subtours, mg, metric)


_SYMBOLS = string.digits + string.ascii_letters


def ascii_map(grid: GridScenario, subtours: Sequence[SubTour] = ()) -> str:
    """Top row first; '#' obstacle, 'B' base, tour cells by id symbol, '.' free."""
    owner = {}
    for st in sorted(subtours, key=lambda s: s.id):
        for c in st.walk:
            owner.setdefault(c, _SYMBOLS[st.id % len(_SYMBOLS)])
    rows = []
    for y in range(grid.height - 1, -1, -1):
        row = []
        for x in range(grid.width):
            c = (x, y)
            if c in grid.obstacles:
                row.append("#")
            elif c == grid.base_cell:
                row.append("B")
            else:
                row.append(owner.get(c, "."))
        rows.append("".join(row))
    return "\n".join(rows) + "\n"
