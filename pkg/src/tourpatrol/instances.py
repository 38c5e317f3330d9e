"""Tour-graph instance families: random graphs, worked layouts, hardness constructions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .tours import Direction, DomainError, Tour, TourGraph, TourTree, edge_key


# --- random instances --------------------------------------------------------

def random_tour_graph(rng: np.random.Generator, n: int, *, edge_prob: float = 0.25,
                      length_range=(1.0, 20.0), integer: bool = False,
                      sensing: str = "full") -> TourGraph:
    """Connected random tour graph: a random spanning tree plus extra edges.

    ``sensing`` is ``"full"``, ``"mixed"`` (random arcs, some relay-only
    tours) or ``"none"``.
    """
    lo, hi = length_range
    if integer:
        lengths = rng.integers(int(lo), int(hi) + 1, size=n).astype(float)
    else:
        lengths = rng.uniform(lo, hi, size=n)
    edges = set()
    for v in range(1, n):
        edges.add((int(rng.integers(0, v)), v))
    for a, b in itertools.combinations(range(n), 2):
        if (a, b) not in edges and rng.random() < edge_prob:
            edges.add((a, b))
    meet = {v: {} for v in range(n)}
    for a, b in edges:
        for x, y in ((a, b), (b, a)):
            p = rng.integers(0, int(lengths[x])) if integer else rng.uniform(0, lengths[x])
            meet[x][y] = float(p)
    tours = []
    for v in range(n):
        arcs = None
        if sensing == "none":
            arcs = ()
        elif sensing == "mixed":
            r = rng.random()
            if r < 0.2:
                arcs = ()
            elif r < 0.6:
                a, b = sorted(rng.uniform(0, lengths[v], size=2))
                arcs = ((float(a), float(b)),)
        base = None
        if v == 0:
            base = float(rng.integers(0, int(lengths[0]))) if integer else float(rng.uniform(0, lengths[0]))
        tours.append(Tour(v, float(lengths[v]), arcs, meet[v], base))
    return TourGraph(tours={t.id: t for t in tours}, edges=frozenset(edges), v0=0)


def random_tour_tree(rng: np.random.Generator, n: int, **kwargs) -> TourTree:
    graph = random_tour_graph(rng, n, edge_prob=0.0, **kwargs)
    parent = {}
    for a, b in graph.edges:
        parent[max(a, b)] = min(a, b)
    return TourTree(graph, parent)


# --- worked layouts ------------------------------------------------------

def single_tour(length: float = 10.0, base: float = 0.0, **kwargs) -> TourGraph:
    return TourGraph({0: Tour(0, length, base_position=base, **kwargs)}, frozenset(), 0)


def two_tour_example() -> TourGraph:
    """Root A (l=10, base 0, meets B at 3) and leaf B (l=6, meets A at 0)."""
    a = Tour("A", 10.0, None, {"B": 3.0}, 0.0)
    b = Tour("B", 6.0, None, {"A": 0.0})
    return TourGraph.from_tours([a, b], "A")


def seven_tour_tree() -> TourTree:
    """Seven-tour tree in the style of the introductory example, rooted at 5.

    Data paths 2-1-3-5, 4-3-5, 7-6-5; depth 3.  Geometry is a reconstruction.
    """
    spec = {
        1: (10.0, {2: 2.0, 3: 7.0}),
        2: (8.0, {1: 1.0}),
        3: (12.0, {1: 0.0, 4: 4.0, 5: 8.0}),
        4: (9.0, {3: 5.0}),
        5: (11.0, {3: 2.0, 6: 7.0}),
        6: (10.0, {5: 0.0, 7: 5.0}),
        7: (7.0, {6: 3.0}),
    }
    tours = [Tour(v, l, None, m, 0.0 if v == 5 else None) for v, (l, m) in spec.items()]
    graph = TourGraph.from_tours(tours, 5)
    return TourTree(graph, {2: 1, 1: 3, 4: 3, 3: 5, 6: 5, 7: 6})


def five_tour_chain(length: float = 10.0) -> TourTree:
    """Chain 1-2-3-4-5 rooted at tour 1 (base at 0); each tour meets its child half a loop from its parent."""
    half = length / 2.0
    meet = {1: {2: half}}
    for v in range(2, 6):
        meet[v] = {v - 1: 0.0}
        if v < 5:
            meet[v][v + 1] = half
    tours = [Tour(v, length, None, m, 0.0 if v == 1 else None) for v, m in meet.items()]
    graph = TourGraph.from_tours(tours, 1)
    return TourTree(graph, {v: v - 1 for v in range(2, 6)})


def converted_example_graph() -> TourGraph:
    """Seven tours with edges 1-4, 2-7, 3-4, 3-5, 3-6, 3-7, 5-6; base on tour 5.

    Positions are chosen so the meeting-point heuristic builds the path
    2-7-3-6-5 first and then the branch 1-4-3.
    """
    L = 12.0
    meet = {
        1: {4: 0.0},
        2: {7: 3.0},
        3: {7: 0.0, 6: 2.0, 5: 6.0, 4: 7.0},
        4: {1: 0.0, 3: 2.0},
        5: {6: 10.0, 3: 3.0},
        6: {5: 0.0, 3: 2.0},
        7: {3: 0.0, 2: 3.0},
    }
    tours = [Tour(v, L, None, m, 0.0 if v == 5 else None) for v, m in meet.items()]
    return TourGraph.from_tours(tours, 5)


def triangle_graph() -> TourGraph:
    tours = [
        Tour(0, 10.0, None, {1: 2.0, 2: 6.0}, 0.0),
        Tour(1, 8.0, None, {0: 0.0, 2: 4.0}),
        Tour(2, 6.0, None, {0: 1.0, 1: 3.0}),
    ]
    return TourGraph.from_tours(tours, 0)


# --- 3SAT reduction ----------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    var: int
    negated: bool = False


def parse_cnf(text: str) -> list[tuple[Literal, ...]]:
    """Parse ``"1 2 3; -1 -2 4"`` (DIMACS-style literals, clauses split by ';')."""
    clauses = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        lits = tuple(Literal(abs(int(x)), int(x) < 0) for x in chunk.split())
        clauses.append(lits)
    return clauses


PAPER_FORMULA = "1 2 3; -1 -2 4; 2 -3 -4"


def satisfiable(clauses: Sequence[Sequence[Literal]]) -> bool:
    variables = sorted({lit.var for c in clauses for lit in c})
    for values in itertools.product((False, True), repeat=len(variables)):
        assign = dict(zip(variables, values))
        if all(any(assign[l.var] != l.negated for l in c) for c in clauses):
            return True
    return False


def gen_3sat_mdt(clauses: Sequence[Sequence[Literal]], num_vars: Optional[int] = None):
    """Tour graph and fixed (all-CCW) directions encoding a 3-CNF formula.

    Every tour has length 2.  A satisfying assignment admits a tree with worst
    delay 4; without one every tree is strictly worse.
    """
    for c in clauses:
        if len(c) != 3 or len({lit.var for lit in c}) != 3:
            raise DomainError(f"clause {c!r} must have three literals over distinct variables")
    used = {lit.var for c in clauses for lit in c}
    a = max(used | {num_vars or 0})
    two_thirds = float(Fraction(2, 3))
    meet: dict = {}
    meet["t"] = {"x": 1.0, "nx": 1.0}
    meet["x"] = {"t": 0.0}
    meet["nx"] = {"t": 0.0}
    for j in range(1, a + 1):
        xj = f"x{j}"
        meet[xj] = {"x": 0.0, "nx": 1.0}
        meet["x"][xj] = 1.0
        meet["nx"][xj] = 1.0
    for i, c in enumerate(clauses, start=1):
        ci = f"c{i}"
        meet[ci] = {}
        for k, lit in enumerate(c):
            xj = f"x{lit.var}"
            meet[ci][xj] = k * two_thirds
            meet[xj][ci] = 1.0 if lit.negated else 0.0
    tours = [Tour(v, 2.0, None, m, 0.0 if v == "t" else None) for v, m in meet.items()]
    graph = TourGraph.from_tours(tours, "t")
    return graph, {v: Direction.CCW for v in graph.tours}


def random_3cnf(rng: np.random.Generator, num_vars: int, num_clauses: int):
    clauses = []
    for _ in range(num_clauses):
        vs = rng.choice(np.arange(1, num_vars + 1), size=3, replace=False)
        clauses.append(tuple(Literal(int(v), bool(rng.random() < 0.5)) for v in vs))
    return clauses


def unsat_3cnf():
    """All eight sign patterns over three variables."""
    return [tuple(Literal(v, s) for v, s in zip((1, 2, 3), signs))
            for signs in itertools.product((False, True), repeat=3)]


# --- chain with arms ---------------------------------------------------------

def gen_chain_arms(k: int, big: float, small: float, arm_len: Optional[int] = None) -> TourGraph:
    """Chain of ``k`` large tours hanging off ``v0``, each with an arm of small tours back to ``v0``.

    Chain tours meet their predecessor and successor on opposite sides; the
    arm joins a large tour at the same position as its chain predecessor.
    """
    if k < 2:
        raise DomainError("k must be at least 2")
    if not (big > small > 0):
        raise DomainError("need big > small > 0")
    arm_len = k if arm_len is None else arm_len
    meet: dict = {0: {}}
    lengths = {0: big}
    half = big / 2.0
    for i in range(1, k + 1):
        meet[i] = {i - 1: 0.0}
        lengths[i] = big
        meet[i - 1][i] = half if i - 1 > 0 else 0.0
    for i in range(1, k + 1):
        names = [f"a{i}_{j}" for j in range(1, arm_len + 1)]
        chain = [0] + names + [i]
        for name in names:
            meet[name] = {}
            lengths[name] = small
        for x, y in zip(chain, chain[1:]):
            if x == 0:
                meet[0][y] = 0.0
            else:
                meet[x][y] = small / 2.0 if isinstance(x, str) else 0.0
            # arms join the large tour next to its chain predecessor
            meet[y][x] = 0.0
    tours = [Tour(v, lengths[v], None, m, 0.0 if v == 0 else None) for v, m in meet.items()]
    return TourGraph.from_tours(tours, 0)


def reference_graphs() -> dict:
    return {
        "two-tour": two_tour_example(),
        "triangle": triangle_graph(),
        "converted-example": converted_example_graph(),
        "seven-tree": seven_tour_tree().graph,
        "five-chain": five_tour_chain().graph,
    }


__all__ = [
    "Literal", "PAPER_FORMULA", "converted_example_graph", "edge_key", "five_tour_chain", "gen_3sat_mdt",
    "gen_chain_arms", "parse_cnf", "random_3cnf", "random_tour_graph", "random_tour_tree",
    "satisfiable", "seven_tour_tree", "single_tour", "triangle_graph", "two_tour_example",
    "unsat_3cnf",
]
