"""Minimum-delay schedules on a given tour tree.

The data of a subtree reaches its root tour's parent when the subtree's
robot is back at its start position.  ``branch delay`` is the worst delay
over all data of a subtree measured up to that moment; for the root tour
it is the worst delay to the base station.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .tours import (
    BOTH_DIRECTIONS,
    TOL,
    Direction,
    StructureError,
    TourId,
    TourTree,
    idkey,
    loop_offset,
    own_delay,
    travel_time,
)


class ScheduleConsistencyError(RuntimeError):
    """A constructed schedule violates the repeated-schedule inequality."""


@dataclass(frozen=True)
class DelayReport:
    worst_delay: float
    worst_idleness: float
    per_tour_branch_delay: Mapping[TourId, float]


@dataclass(frozen=True)
class Schedule:
    """Start position, direction and initial wait per tour.

    Only start waits are stored; waits for children happen on the fly in the
    online executor and are zero in the planned schedule.
    """

    start: Mapping[TourId, float]
    direction: Mapping[TourId, Direction]
    wait: Mapping[TourId, float]
    lengths: Mapping[TourId, float]

    def tau(self, v: TourId) -> float:
        return self.lengths[v] + self.wait[v]

    def tours(self) -> list:
        return sorted(self.start, key=idkey)

    def table(self) -> str:
        rows = [f"{'tour':>8} {'start':>10} {'dir':>4} {'wait':>10} {'tau':>10}"]
        for v in self.tours():
            rows.append(f"{str(v):>8} {self.start[v]:>10.4g} {self.direction[v].value:>4} "
                        f"{self.wait[v]:>10.4g} {self.tau(v):>10.4g}")
        return "\n".join(rows)


@dataclass(frozen=True)
class RepeatedSchedule:
    schedule: Schedule
    vbar: TourId
    gamma: float = 0.0

    @property
    def worst_idleness(self) -> float:
        return self.schedule.lengths[self.vbar] + self.gamma


def branch_delay(tree: TourTree, v, d: Direction, below: Mapping) -> float:
    """Branch delay of ``v`` in direction ``d`` given its children's branch delays."""
    tour = tree.tours[v]
    start = tree.start_position(v)
    best = own_delay(tour, start, d)
    for w in tree.children(v):
        if below[w] == -math.inf:
            continue
        best = max(best, below[w] + travel_time(tour, tour.meet(w), start, d))
    return best


def _postorder(tree: TourTree) -> list:
    return list(reversed(tree.preorder()))


def _report(tree: TourTree, branch: Mapping) -> DelayReport:
    wd = max(branch[tree.v0], 0.0)
    wi = max(t.length for t in tree.tours.values())
    per = {v: max(b, 0.0) for v, b in branch.items()}
    return DelayReport(wd, wi, per)


def evaluate_tree_delay(tree: TourTree, directions: Mapping[TourId, Direction]) -> DelayReport:
    """Worst delay and idleness of the minimum-delay schedule for fixed directions."""
    missing = set(tree.tours) - set(directions)
    if missing:
        raise StructureError(f"no direction for tours {sorted(missing, key=idkey)!r}")
    branch = {}
    for v in _postorder(tree):
        branch[v] = branch_delay(tree, v, Direction(directions[v]), branch)
    return _report(tree, branch)


def choose_direction(tree: TourTree, v, below: Mapping) -> tuple[Direction, float]:
    """Direction minimising the branch delay of ``v``; ties go clockwise."""
    cw = branch_delay(tree, v, Direction.CW, below)
    ccw = branch_delay(tree, v, Direction.CCW, below)
    if cw <= ccw + TOL:
        return Direction.CW, cw
    return Direction.CCW, ccw


def start_waits(tree: TourTree, directions: Mapping[TourId, Direction]) -> dict:
    """Initial waits so each child returns exactly when its parent passes.

    A child whose meeting point coincides with the parent's start is met at the
    end of the parent's traversal, one full loop after the parent departs.
    """
    depart = {tree.v0: 0.0}
    for v in tree.preorder():
        tour = tree.tours[v]
        start = tree.start_position(v)
        for w in tree.children(v):
            reach = loop_offset(tour, start, tour.meet(w), directions[v])
            depart[w] = depart[v] + reach - tree.tours[w].length
    shift = min(depart.values())
    return {v: t - min(0.0, shift) for v, t in depart.items()}


def minimum_delay_schedule(tree: TourTree) -> tuple[Schedule, DelayReport]:
    """Directions and start waits that minimise the worst delay on ``tree``."""
    branch, dirs = {}, {}
    for v in _postorder(tree):
        dirs[v], branch[v] = choose_direction(tree, v, branch)
    schedule = Schedule(
        start={v: tree.start_position(v) for v in tree.tours},
        direction=dirs,
        wait=start_waits(tree, dirs),
        lengths={v: t.length for v, t in tree.tours.items()},
    )
    return schedule, _report(tree, branch)


def schedule_for(tree: TourTree, directions: Mapping[TourId, Direction]) -> Schedule:
    dirs = {v: Direction(d) for v, d in directions.items()}
    return Schedule(
        start={v: tree.start_position(v) for v in tree.tours},
        direction=dirs,
        wait=start_waits(tree, dirs),
        lengths={v: t.length for v, t in tree.tours.items()},
    )


def make_repeated_schedule(schedule: Schedule) -> RepeatedSchedule:
    longest = max(schedule.lengths.values())
    vbar = min((v for v, l in schedule.lengths.items() if l == longest), key=idkey)
    rep = RepeatedSchedule(schedule, vbar, 0.0)
    for w in schedule.tours():
        delta = schedule.wait[w] - schedule.wait[vbar]
        if schedule.tau(w) > schedule.tau(vbar) + delta + rep.gamma + TOL:
            raise ScheduleConsistencyError(f"tour {w!r} cannot finish before the next repetition")
    return rep
