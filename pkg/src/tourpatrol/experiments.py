"""Cooperative versus single-hop comparison on grid scenarios.

A cooperative cell picks meeting points, solves for a tree with one of the
heuristics (or the exact search) and simulates the online executor.  The
single-hop cell reuses the same sub-tours, adds base detours and lets every
robot deliver its own data.  Travelled distance is summed over a window as
long as the cooperative worst idleness, starting after warm-up.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .grid import GridInstance, GridMetric, GridScenario, build_grid_instance, grand_tour, single_hop_tours
from .meeting import select_meeting_points
from .simulator import SingleHopRoute, default_window, init_world, run_single_hop
from .tours import TOL, StructureError
from .treesel import solve

COOPERATIVE_METHODS = ("sp", "cg", "opt")
SINGLE_HOP = "singlehop"


@dataclass(frozen=True)
class ComparisonRow:
    scenario: str
    method: str
    n: int
    seed: int
    WI_analytic: float
    WI_measured: float
    WD_analytic: float
    WD_measured: float
    convergence_time: float
    sum_distance: float
    status: str = "ok"

    @classmethod
    def columns(cls) -> list:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)


def single_hop_delay(route: SingleHopRoute) -> float:
    """Worst time from a sensing offset to the next base passage on a looping route."""
    bases = np.asarray(sorted(route.base_offsets), dtype=float)
    worst = 0.0
    for o in route.sensing_offsets:
        later = bases[bases > o + TOL]
        nxt = later[0] if later.size else route.length + bases[0]
        worst = max(worst, nxt - o)
    return float(worst)


def cooperative_row(inst: GridInstance, method: str, scenario: str, seed: int) -> ComparisonRow:
    graph, _ = select_meeting_points(inst.multigraph)
    res = solve(graph, method)
    warmup, horizon = default_window(res.tree)
    metrics = init_world(res.tree, res.directions).run(horizon, warmup)
    wi = res.report.worst_idleness
    window = init_world(res.tree, res.directions).run(warmup + wi, warmup)
    return ComparisonRow(scenario, method, len(inst.subtours), seed, wi, metrics.measured_WI,
                         res.report.worst_delay, metrics.measured_WD, metrics.convergence_time,
                         window.sum_distance)


def single_hop_row(inst: GridInstance, cooperative_wi: float, scenario: str, seed: int) -> ComparisonRow:
    n = len(inst.subtours)
    try:
        plan = single_hop_tours(inst.subtours, inst.grid, metric=inst.metric, cooperative_wi=cooperative_wi)
    except StructureError:
        nan = math.nan
        return ComparisonRow(scenario, SINGLE_HOP, n, seed, nan, nan, math.inf, math.inf, 0.0, nan, "unbounded")
    period = max(r.length for r in plan.routes)
    metrics = run_single_hop(plan.routes, 10 * period, 5 * period)
    window = run_single_hop(plan.routes, 5 * period + cooperative_wi, 5 * period)
    wd = max(single_hop_delay(r) for r in plan.routes)
    status = "forced" if plan.forced else "ok"
    return ComparisonRow(scenario, SINGLE_HOP, n, seed, period, metrics.measured_WI, wd,
                         metrics.measured_WD, 0.0, window.sum_distance, status)


def compare_instance(inst: GridInstance, methods: Sequence[str] = ("cg",), scenario: str = "grid",
                     seed: int = 0) -> list:
    """Rows for each cooperative method plus one single-hop row.

    The single-hop budget uses the worst idleness of the first method.
    """
    rows = [cooperative_row(inst, m, scenario, seed) for m in methods if m != SINGLE_HOP]
    wi = rows[0].WI_analytic if rows else 0.0
    if SINGLE_HOP in methods or not rows:
        rows.append(single_hop_row(inst, wi, scenario, seed))
    return rows


def _seed_rows(args) -> list:
    width, height, ns, seed, rcom, restarts, methods = args
    base = GridScenario(width, height, rcom=rcom, n=1, rng_seed=seed)
    metric = GridMetric(base)
    tour = grand_tour(base, metric, restarts=restarts)
    rows = []
    for n in ns:
        grid = GridScenario(width, height, rcom=rcom, n=n, rng_seed=seed)
        inst = build_grid_instance(grid, metric=metric, tour=tour)
        rows += compare_instance(inst, methods, f"grid{width}x{height}", seed)
    return rows


def grid_sweep(width: int = 20, height: int = 60, ns: Iterable[int] = range(2, 21),
               seeds: Iterable[int] = (0,), rcom: int = 1, restarts: int = 2,
               methods: Sequence[str] = ("cg", SINGLE_HOP), workers: int = 1) -> list:
    """Rows for every (method, n, seed), sorted deterministically.

    One grand tour is built per seed and split for every robot count.
    """
    jobs = [(width, height, tuple(ns), s, rcom, restarts, tuple(methods)) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_seed_rows, jobs))
    else:
        parts = [_seed_rows(j) for j in jobs]
    rows = [r for part in parts for r in part]
    return sorted(rows, key=lambda r: (r.scenario, r.seed, r.n, r.method))


@dataclass(frozen=True)
class Ordering:
    scenario: str
    n: int
    seed: int
    method: str
    wi_ok: bool
    wd_ok: bool
    distance_ok: bool
    strict: bool

    @property
    def all_ok(self) -> bool:
        return self.wi_ok and self.wd_ok and self.distance_ok


def orderings(rows: Sequence[ComparisonRow], method: Optional[str] = None) -> list:
    """Compare each cooperative row with the single-hop row of the same cell.

    ``strict`` holds when all three comparisons are strict.
    """
    cells: dict = {}
    for r in rows:
        cells.setdefault((r.scenario, r.n, r.seed), {})[r.method] = r
    out = []
    for (scenario, n, seed), by in sorted(cells.items()):
        single = by.get(SINGLE_HOP)
        if single is None:
            continue
        for m, coop in sorted(by.items()):
            if m == SINGLE_HOP or (method is not None and m != method):
                continue
            wi = coop.WI_measured <= single.WI_measured + TOL
            wd = single.WD_measured <= coop.WD_measured + TOL
            dist = single.sum_distance >= coop.sum_distance - TOL
            strict = (coop.WI_measured < single.WI_measured - TOL and single.WD_measured < coop.WD_measured - TOL
                      and single.sum_distance > coop.sum_distance + TOL)
            out.append(Ordering(scenario, n, seed, m, wi, wd, dist, strict))
    return out
