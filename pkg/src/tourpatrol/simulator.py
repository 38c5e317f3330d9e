"""Event-driven execution of the online patrol state machine.

Every robot runs the same three-state machine:

INIT
    travel from the initial position to the start position (the meeting
    point with the parent, or the base for the root tour).
AT_WAIT
    wait at the start position for the parent.  Once the parent is there,
    the child hands over its data, waits ``L - l_v`` (``L`` is the longest
    tour) and starts its loop.  The root treats the base station as an
    always-present parent.
MOVING
    traverse the tour once, stopping at every child's meeting point until
    that child has arrived; the total time spent waiting for children is
    accumulated in ``delta_t``.

Data is captured at sample points on sensing arcs.  A point counts as
visited when the robot departs from it, so a robot standing still does not
refresh its data.  Data travels with the robot until the next handover;
the root delivers at the base.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .scheduling import minimum_delay_schedule
from .tours import TOL, Direction, DomainError, StructureError, Tour, TourId, TourTree, idkey

RESYNC_RULES = ("shift", "literal")


class MachineState(str, enum.Enum):
    INIT = "INIT"
    AT_WAIT = "AT_WAIT"
    MOVING = "MOVING"


@dataclass
class DataItem:
    origin: tuple
    capture_time: float
    arrival_time: Optional[float] = None
    holders: set = field(default_factory=set)

    @property
    def delay(self) -> Optional[float]:
        return None if self.arrival_time is None else self.arrival_time - self.capture_time


@dataclass
class RobotState:
    tour: TourId
    machine_state: MachineState
    position: float
    delta_t: float = 0.0
    buffer: list = field(default_factory=list)


@dataclass(frozen=True)
class TraceEvent:
    time: float
    robot: TourId
    kind: str
    position: float
    detail: str = ""


@dataclass
class Metrics:
    measured_WI: float
    measured_WD: float
    distance: dict
    convergence_time: float
    warmup: float
    horizon: float
    short_horizon: bool = False
    not_converged: bool = False
    max_wait: float = 0.0
    undelivered: int = 0
    oldest_undelivered_age: float = 0.0

    @property
    def sum_distance(self) -> float:
        return float(sum(self.distance.values()))


def sample_positions(tour: Tour, density: float = 1.0) -> np.ndarray:
    """Positions tracked for idleness and data capture on ``tour``.

    Finite sensing locations are used as given.  Otherwise every sensing
    arc contributes its endpoints (the closure, so suprema are attained),
    a regular grid of ``density`` points per unit length, and the meeting
    and base positions that fall inside it.
    """
    if tour.sensing_points is not None:
        return np.unique(np.asarray(tour.sensing_points, dtype=float))
    if not tour.senses:
        return np.empty(0)
    special = list(tour.meeting_positions.values())
    if tour.base_position is not None:
        special.append(tour.base_position)
    step = 1.0 / density
    pts = []
    for a, b in tour.sensing_arcs:
        pts += [a, b % tour.length]
        pts += list(np.arange(a, b, step))
        pts += [p for p in special if a - TOL <= p <= b + TOL]
    pts = np.round(np.asarray(pts, dtype=float), 12) % tour.length
    return np.unique(pts)


def _offsets(length: float, origin: float, pts: np.ndarray, d: Direction) -> np.ndarray:
    off = (pts - origin) % length if d is Direction.CCW else (origin - pts) % length
    off[np.abs(off - length) <= TOL] = 0.0
    off[np.abs(off) <= TOL] = 0.0
    return off


@dataclass
class _Plan:
    tour: Tour
    direction: Direction
    start: float
    parent: Optional[TourId]
    stops: list  # (offset from start, child id or None for the loop end)
    slack: float  # wait after each parent rendezvous
    samples: np.ndarray


class SimWorld:
    """State of one simulation run; advance it with :meth:`step` or :meth:`run`."""

    def __init__(self, tree: TourTree, directions: Mapping, initial_positions: Optional[Mapping] = None,
                 *, resync: str = "shift", density: float = 1.0, record_trace: bool = False):
        if resync not in RESYNC_RULES:
            raise ValueError(f"unknown resync rule {resync!r}")
        self.tree = tree
        self.resync = resync
        self.record_trace = record_trace
        self.cycle = max(t.length for t in tree.tours.values())
        self.plans: dict = {}
        for v in tree.preorder():
            tour = tree.tours[v]
            d = Direction(directions[v])
            start = tree.start_position(v)
            stops = []
            for w in tree.children(v):
                off = travel_time_offset(tour, start, tour.meet(w), d)
                stops.append((off, w))
            stops.sort(key=lambda s: (s[0], idkey(s[1])))
            stops.append((tour.length, None))
            parent = tree.parent.get(v)
            self.plans[v] = _Plan(tour, d, start, parent, stops, self.cycle - tour.length,
                                  sample_positions(tour, density))
        initial_positions = dict(initial_positions or {})
        self.robots: dict = {}
        for v, plan in self.plans.items():
            p = initial_positions.get(v, plan.start)
            try:
                p = plan.tour._check(p)
            except DomainError as exc:
                raise DomainError(f"initial position of robot {v!r}: {exc}") from None
            self.robots[v] = RobotState(v, MachineState.INIT, p)
        self.clock = 0.0
        self.items: list = []
        self.trace: list = []
        self.visits = {(v, float(p)): [] for v, plan in self.plans.items() for p in plan.samples}
        self.segments = {v: [] for v in self.plans}
        self._queue: list = []
        self._seq = 0
        self._hold = {v: 0.0 for v in self.plans}
        self._hold_at = {v: None for v in self.plans}
        self._stop_idx = {v: 0 for v in self.plans}
        self._seg = {v: None for v in self.plans}
        self._waiting_for = {v: None for v in self.plans}
        self._stop_time = {v: 0.0 for v in self.plans}
        self._wait_since = {v: None for v in self.plans}
        self._first_meet = {}
        self._pending = {v: False for v in self.plans}
        self._last_reset = 0.0
        self._max_wait = 0.0
        self._started = False

    # --- bookkeeping ------------------------------------------------------

    def _push(self, t: float, kind: str, v) -> None:
        heapq.heappush(self._queue, (t, self._seq, kind, v))
        self._seq += 1

    def _log(self, t, v, kind, detail="") -> None:
        if self.record_trace:
            self.trace.append(TraceEvent(t, v, kind, self.robots[v].position, detail))

    def _position_at(self, v, offset: float) -> float:
        plan = self.plans[v]
        L = plan.tour.length
        sign = 1.0 if plan.direction is Direction.CCW else -1.0
        p = (plan.start + sign * offset) % L
        return 0.0 if abs(p - L) <= TOL else p

    def _note_wait(self, v, t) -> None:
        since = self._wait_since[v]
        if since is not None:
            self._max_wait = max(self._max_wait, t - since)
        self._wait_since[v] = None

    # --- state machine ----------------------------------------------------

    def _start(self) -> None:
        self._started = True
        for v in self.tree.preorder():
            r = self.robots[v]
            if abs(r.position - self.plans[v].start) <= TOL:
                self._log(0.0, v, "init_done")
                self._enter_at_wait(v, 0.0)
            else:
                self._push(0.0, "depart", v)

    def _enter_at_wait(self, v, t) -> None:
        r = self.robots[v]
        if r.machine_state is MachineState.INIT:
            r.delta_t = 0.0
        r.machine_state = MachineState.AT_WAIT
        r.position = self.plans[v].start
        self._wait_since[v] = t
        parent = self.plans[v].parent
        if parent is None:
            self._parent_met(v, t)
        elif self._waiting_for[parent] == v:
            self._rendezvous(parent, v, t)

    def _rendezvous(self, u, v, t) -> None:
        """Parent ``u`` (stopped at the meeting point) meets child ``v`` (at its start)."""
        child, parent = self.robots[v], self.robots[u]
        for k in child.buffer:
            self.items[k].holders = {u}
        parent.buffer.extend(child.buffer)
        child.buffer = []
        self._waiting_for[u] = None
        waited = t - self._stop_time[u]
        self._note_wait(u, t)
        if waited > TOL:
            parent.delta_t += waited
        self._log(t, u, "rendezvous", str(v))
        self._push(t, "depart", u)
        self._parent_met(v, t)

    def _parent_met(self, v, t) -> None:
        r = self.robots[v]
        if self._pending[v]:
            # a held robot met again before it left keeps its departure time
            return
        slack = self.plans[v].slack
        wait = max(slack - r.delta_t, 0.0) if self.resync == "literal" else slack
        if r.delta_t > TOL:
            self._last_reset = t
        r.delta_t = 0.0
        self._first_meet.setdefault(v, t)
        self._pending[v] = True
        self._push(t + wait, "depart", v)

    def _depart(self, v, t) -> None:
        r = self.robots[v]
        if self._hold[v] > 0:
            hold, self._hold[v] = self._hold[v], 0.0
            at, self._hold_at[v] = self._hold_at[v], None
            self._log(t, v, "hold", repr(hold) if at is None else f"{hold!r}@{at!r}")
            self._push(t + hold, "depart", v)
            return
        plan = self.plans[v]
        self._note_wait(v, t)
        if r.machine_state is MachineState.AT_WAIT:
            self._pending[v] = False
        if r.machine_state is MachineState.INIT:
            length = _travel(plan.tour, r.position, plan.start, plan.direction)
            self._seg[v] = [t, r.position, length, None, 0.0]
        else:
            if r.machine_state is MachineState.AT_WAIT:
                r.machine_state = MachineState.MOVING
                self._stop_idx[v] = 0
                here = 0.0
            else:
                here = plan.stops[self._stop_idx[v] - 1][0]
            target = plan.stops[self._stop_idx[v]][0]
            self._seg[v] = [t, r.position, target - here, target, 0.0]
        self._log(t, v, "depart")
        self._push(t + self._seg[v][2], "arrive", v)

    def _capture(self, v, upto: float) -> None:
        """Record visits on the current segment at offsets in ``[done, upto)``."""
        seg = self._seg[v]
        t0, origin, _, _, done = seg
        plan = self.plans[v]
        seg[4] = max(done, upto)
        if plan.samples.size == 0 or upto <= done:
            return
        off = _offsets(plan.tour.length, origin, plan.samples, plan.direction)
        hits = np.flatnonzero((off >= done) & (off < upto))
        for k in hits[np.argsort(off[hits], kind="stable")]:
            p = float(plan.samples[k])
            ts = t0 + float(off[k])
            self.visits[(v, p)].append(ts)
            self.items.append(DataItem((v, p), ts, None, {v}))
            self.robots[v].buffer.append(len(self.items) - 1)

    def _arrive(self, v, t) -> None:
        r = self.robots[v]
        plan = self.plans[v]
        t0, origin, length, target, _ = self._seg[v]
        self._capture(v, length - TOL)
        if length > 0:
            self.segments[v].append((t0, t))
        if r.machine_state is MachineState.INIT:
            r.position = plan.start
            self._log(t, v, "init_done")
            self._enter_at_wait(v, t)
            return
        r.position = self._position_at(v, target)
        _, child = plan.stops[self._stop_idx[v]]
        self._stop_idx[v] += 1
        if child is None:
            if plan.parent is None:
                for k in r.buffer:
                    self.items[k].arrival_time = t
                    self.items[k].holders = set()
                r.buffer = []
                self._log(t, v, "deliver")
            self._log(t, v, "loop_end")
            self._enter_at_wait(v, t)
            return
        self._stop_time[v] = t
        self._wait_since[v] = t
        self._waiting_for[v] = child
        self._log(t, v, "stop", str(child))
        if self.robots[child].machine_state is MachineState.AT_WAIT:
            self._rendezvous(v, child, t)

    # --- public driver ---------------------------------------------------

    def step(self) -> bool:
        """Process one event; returns False when nothing is left to do."""
        if not self._started:
            self._start()
        if not self._queue:
            return False
        t, _, kind, v = heapq.heappop(self._queue)
        self.clock = t
        if kind == "depart":
            self._depart(v, t)
        else:
            self._arrive(v, t)
        return True

    def next_time(self) -> float:
        if not self._started:
            self._start()
        return self._queue[0][0] if self._queue else math.inf

    def inject_disturbance(self, tour, extra_wait: float, at: Optional[float] = None) -> None:
        """Hold robot ``tour`` for ``extra_wait`` at its next departure.

        ``at`` is the requested time, kept in the trace so a replay can
        schedule the same disturbance.
        """
        if extra_wait < 0:
            raise DomainError("extra_wait must be non-negative")
        self._hold[tour] += float(extra_wait)
        if at is not None:
            prev = self._hold_at[tour]
            self._hold_at[tour] = float(at) if prev is None else max(prev, float(at))

    def advance(self, until: float) -> None:
        while self.next_time() <= until:
            self.step()
        self.clock = max(self.clock, until)

    def _flush(self, until: float) -> None:
        """Record visits already made on segments still in progress at ``until``."""
        for v, seg in self._seg.items():
            if seg is None or self.robots[v].machine_state is MachineState.AT_WAIT:
                continue
            t0, _, length, _, _ = seg
            if t0 <= until < t0 + length:
                self._capture(v, min(length - TOL, until - t0 + TOL))

    @property
    def convergence_time(self) -> float:
        first = max(self._first_meet.values(), default=0.0)
        if len(self._first_meet) < len(self.plans):
            return math.inf
        return max(self._last_reset, first)

    def run(self, horizon: float, warmup: float = 0.0) -> Metrics:
        if horizon <= warmup:
            raise DomainError("horizon must exceed warmup")
        self.advance(horizon)
        self._flush(horizon)
        wi = _window_idleness(self.visits, warmup, horizon)
        wd, undelivered, oldest = _window_delay(self.items, warmup, horizon)
        dist = {v: _overlap(self.segments[v], warmup, horizon) for v in self.plans}
        conv = self.convergence_time
        return Metrics(
            measured_WI=wi, measured_WD=wd, distance=dist, convergence_time=conv,
            warmup=warmup, horizon=horizon,
            short_horizon=horizon - warmup < self.cycle,
            not_converged=conv > warmup, max_wait=self._max_wait,
            undelivered=undelivered, oldest_undelivered_age=oldest,
        )


def travel_time_offset(tour: Tour, start: float, q: float, d: Direction) -> float:
    """Offset of ``q`` along the loop from ``start``; a point at ``start`` is reached at the end."""
    off = _travel(tour, start, q, d)
    return tour.length if off <= TOL else off


def _travel(tour: Tour, p: float, q: float, d: Direction) -> float:
    off = (q - p) % tour.length if d is Direction.CCW else (p - q) % tour.length
    return 0.0 if off <= TOL or abs(off - tour.length) <= TOL else off


def _window_idleness(visits: Mapping, warmup: float, horizon: float) -> float:
    worst = 0.0
    for times in visits.values():
        last = 0.0
        for t in times:
            if t > horizon:
                break
            if t > warmup:
                worst = max(worst, t - last)
            last = t
        worst = max(worst, horizon - last)
    return worst


def _window_delay(items, warmup: float, horizon: float):
    worst, undelivered, oldest = 0.0, 0, 0.0
    for it in items:
        if it.capture_time < warmup - TOL or it.capture_time > horizon:
            continue
        if it.arrival_time is not None and it.arrival_time <= horizon:
            worst = max(worst, it.arrival_time - it.capture_time)
        else:
            undelivered += 1
            age = horizon - it.capture_time
            oldest = max(oldest, age)
            worst = max(worst, age)
    return worst, undelivered, oldest


def _overlap(segments, a: float, b: float) -> float:
    return float(sum(max(0.0, min(t1, b) - max(t0, a)) for t0, t1 in segments))


# --- functional interface ---------------------------------------------------

def init_world(tree: TourTree, directions: Optional[Mapping] = None,
               initial_positions: Optional[Mapping] = None, **kwargs) -> SimWorld:
    """World for ``tree``; directions default to the minimum-delay choice."""
    if directions is None:
        directions = minimum_delay_schedule(tree)[0].direction
    return SimWorld(tree, directions, initial_positions, **kwargs)


def step(world: SimWorld) -> SimWorld:
    world.step()
    return world


def inject_disturbance(world: SimWorld, tour, extra_wait: float) -> SimWorld:
    world.inject_disturbance(tour, extra_wait)
    return world


def run(world: SimWorld, horizon: float, warmup: float = 0.0) -> Metrics:
    return world.run(horizon, warmup)


def run_disturbed(world: SimWorld, disturbances, horizon: float, warmup: float = 0.0) -> Metrics:
    """Run with ``disturbances`` given as ``(time, tour, extra_wait)``.

    Each hold is injected once every event strictly before its time has been
    processed, so it applies to the robot's first departure at or after it.
    """
    for t, tour, extra in sorted(disturbances, key=lambda d: (d[0], idkey(d[1]))):
        if tour not in world.plans:
            raise DomainError(f"unknown tour {tour!r} in disturbance")
        while world.next_time() < t:
            world.step()
        world.inject_disturbance(tour, extra, at=t)
    return world.run(horizon, warmup)


def disturbances_from_trace(trace) -> list:
    """Holds recorded in a trace, as a disturbance schedule that reproduces it.

    Several requests merged into one hold come back as a single request at
    the latest of their times; it lands on the same departure.
    """
    out = []
    for e in trace:
        if e.kind == "hold":
            extra, _, at = e.detail.partition("@")
            out.append((float(at) if at else e.time, e.robot, float(extra)))
    return out


def default_window(tree: TourTree) -> tuple[float, float]:
    """(warmup, horizon) long enough for convergence from start positions."""
    cycle = max(t.length for t in tree.tours.values())
    warmup = (tree.depth() + 3) * cycle
    return warmup, warmup + (tree.depth() + 4) * cycle


# --- single-hop baseline ---------------------------------------------------

@dataclass(frozen=True)
class SingleHopRoute:
    """Closed walk of one robot that delivers its own data at base passages.

    Offsets are measured along the walk from its origin.
    """

    id: TourId
    length: float
    sensing_offsets: tuple
    base_offsets: tuple

    @classmethod
    def from_tour(cls, tour: Tour, density: float = 1.0) -> "SingleHopRoute":
        if tour.base_position is None:
            raise StructureError(f"tour {tour.id!r} never reaches the base: unbounded delay")
        pts = sample_positions(tour, density)
        offs = _offsets(tour.length, tour.base_position, pts, Direction.CCW)
        return cls(tour.id, tour.length, tuple(sorted(float(o) for o in offs)), (0.0,))


def run_single_hop(routes, horizon: float, warmup: float = 0.0) -> Metrics:
    """Every robot loops its route without waiting; data is delivered at the base."""
    if horizon <= warmup:
        raise DomainError("horizon must exceed warmup")
    visits, items, dist = {}, [], {}
    for r in routes:
        if not r.base_offsets:
            raise StructureError(f"route {r.id!r} never reaches the base: unbounded delay")
        bases = np.asarray(sorted(r.base_offsets), dtype=float)
        loops = int(math.floor(horizon / r.length)) + 2
        for j, o in enumerate(r.sensing_offsets):
            times = [k * r.length + o for k in range(loops) if k * r.length + o <= horizon]
            visits[(r.id, j)] = times
            for t in times:
                k, rel = divmod(t, r.length)
                later = bases[bases > rel + TOL]
                arrival = float(k * r.length + (later[0] if later.size else r.length + bases[0]))
                items.append(DataItem((r.id, j), t, arrival))
        dist[r.id] = horizon - warmup
    wi = _window_idleness(visits, warmup, horizon)
    wd, undelivered, oldest = _window_delay(items, warmup, horizon)
    cycle = max((r.length for r in routes), default=0.0)
    return Metrics(wi, wd, dist, 0.0, warmup, horizon, horizon - warmup < cycle, False, 0.0,
                   undelivered, oldest)
