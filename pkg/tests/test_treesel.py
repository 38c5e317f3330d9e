import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import exhaustive_full_optimum
from tourpatrol.grid import GridScenario, build_grid_instance
from tourpatrol.instances import (
    converted_example_graph,
    gen_chain_arms,
    random_tour_graph,
    random_tour_tree,
    seven_tour_tree,
    triangle_graph,
)
from tourpatrol.meeting import select_meeting_points
from tourpatrol.scheduling import evaluate_tree_delay, minimum_delay_schedule
from tourpatrol.tours import Direction, StructureError, Tour, TourGraph, TourTree
from tourpatrol.treesel import (
    SizeCapError,
    bfs_tree,
    brute_force_optimal,
    build_converted_graph,
    cg_lower_bound,
    mdtd_cg,
    mdtd_sp,
    size_cap_default,
    solve,
    spanning_trees,
)

CW, CCW = Direction.CW, Direction.CCW


def test_triangle_sp_tree():
    assert dict(bfs_tree(triangle_graph()).parent) == {1: 0, 2: 0}


def test_tree_shaped_graph_is_returned_unchanged():
    tree = seven_tour_tree()
    graph = tree.graph
    expected = minimum_delay_schedule(tree)[1].worst_delay
    for method in ("sp", "cg", "opt"):
        res = solve(graph, method)
        assert dict(res.tree.parent) == dict(tree.parent)
        assert res.report.worst_delay == pytest.approx(expected)


def test_converted_graph_single_tour_arcs():
    t0 = Tour(0, 12.0, meeting_positions={1: 4.0, 2: 9.0}, base_position=0.0)
    t1 = Tour(1, 5.0, meeting_positions={0: 0.0})
    t2 = Tour(2, 5.0, meeting_positions={0: 0.0})
    cg = build_converted_graph(TourGraph.from_tours([t0, t1, t2], 0))
    assert cg.pairs == (None, (0, 1), (0, 2))
    assert cg.weight(0, 1) == 4.0 and cg.weight(1, 2) == 5.0 and cg.weight(0, 2) == 3.0
    assert cg.adj[0][2][2] is CW


def test_converted_graph_two_tours():
    g = TourGraph.from_tours([Tour(0, 10.0, meeting_positions={1: 3.0}, base_position=0.0),
                              Tour(1, 6.0, meeting_positions={0: 0.0})], 0)
    cg = build_converted_graph(g)
    assert [cg.label(i) for i in range(len(cg.pairs))] == ["v0x", "v01"]
    assert cg.edges() == [(0, 1, 3.0, 0, CCW)]


def test_converted_example_vertices():
    cg = build_converted_graph(converted_example_graph())
    labels = sorted(cg.label(i) for i in range(1, len(cg.pairs)))
    assert labels == ["v14", "v27", "v34", "v35", "v36", "v37", "v56"]


def test_converted_example_walkthrough():
    res = mdtd_cg(converted_example_graph())
    assert dict(res.tree.parent) == {2: 7, 7: 3, 3: 6, 6: 5, 1: 4, 4: 3}
    d = res.directions
    assert (d[7], d[6], d[3], d[5], d[4]) == (CW, CW, CCW, CCW, CCW)


def test_converted_example_values():
    g = converted_example_graph()
    # frozen from the exhaustive oracle and the heuristics
    assert mdtd_cg(g).report.worst_delay == 25.0
    assert mdtd_sp(g).report.worst_delay == 24.0
    assert brute_force_optimal(g).report.worst_delay == 24.0
    assert exhaustive_full_optimum(g, Direction) == 24.0
    assert cg_lower_bound(g) == 21.0


def test_chain_arms_trees():
    k = 6
    g = gen_chain_arms(k, 1000.0, 0.1)
    sp = mdtd_sp(g).tree.parent
    assert all(sp[i] == i - 1 for i in range(1, k + 1))
    cg = mdtd_cg(g).tree.parent
    for i in range(2, k + 1):
        assert isinstance(cg[i], str) and cg[i].startswith(f"a{i}_")


def test_cg_never_builds_cycles_on_grid_graphs():
    # a shortest data route here leaves a tour and comes back to it later
    inst = build_grid_instance(GridScenario(20, 60, rcom=1, n=13, rng_seed=0))
    graph, _ = select_meeting_points(inst.multigraph)
    res = mdtd_cg(graph)
    assert set(res.tree.parent) == set(graph.tours) - {graph.v0}


def test_solve_rejects_unknown_method_and_disconnected_graphs():
    with pytest.raises(ValueError):
        solve(triangle_graph(), "greedy")
    g = TourGraph({0: Tour(0, 2.0, base_position=0.0), 1: Tour(1, 2.0)}, frozenset(), 0)
    for method in ("sp", "cg", "opt"):
        with pytest.raises(StructureError):
            solve(g, method)


def test_size_cap(monkeypatch):
    g = gen_chain_arms(2, 10.0, 1.0)
    with pytest.raises(SizeCapError):
        brute_force_optimal(g, cap=3)
    monkeypatch.setenv("TOURPATROL_SIZE_CAP", "4")
    assert size_cap_default() == 4
    with pytest.raises(SizeCapError):
        brute_force_optimal(g)


def _enumerated_optimum(graph, fixed=None):
    best = np.inf
    for parent in spanning_trees(graph):
        tree = TourTree(graph, parent)
        dirs = fixed or minimum_delay_schedule(tree)[0].direction
        best = min(best, evaluate_tree_delay(tree, dirs).worst_delay)
    return best


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.sampled_from(["full", "mixed"]))
def test_exhaustive_search_matches_enumeration(seed, n, sensing):
    rng = np.random.default_rng(seed)
    g = random_tour_graph(rng, n, edge_prob=0.5, sensing=sensing)
    opt = brute_force_optimal(g).report.worst_delay
    assert opt == pytest.approx(_enumerated_optimum(g), abs=1e-9)
    assert mdtd_sp(g).report.worst_delay >= opt - 1e-9
    assert mdtd_cg(g).report.worst_delay >= opt - 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_exhaustive_search_matches_independent_oracle(seed, n):
    rng = np.random.default_rng(seed)
    g = random_tour_graph(rng, n, edge_prob=0.5)
    assert brute_force_optimal(g).report.worst_delay == pytest.approx(exhaustive_full_optimum(g, Direction), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_exhaustive_search_with_fixed_directions(seed, n):
    rng = np.random.default_rng(seed)
    g = random_tour_graph(rng, n, edge_prob=0.5)
    fixed = {v: (CW if rng.random() < 0.5 else CCW) for v in g.tours}
    res = brute_force_optimal(g, fixed_directions=fixed)
    assert res.directions == fixed
    assert res.report.worst_delay == pytest.approx(_enumerated_optimum(g, fixed), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 7))
def test_lower_bound_and_shifted_depth_bound(seed, n):
    g = random_tour_graph(np.random.default_rng(seed), n)
    opt = brute_force_optimal(g).report.worst_delay
    assert cg_lower_bound(g) <= opt + 1e-9
    # own delay and every relay each cost at most one loop of the longest tour
    assert mdtd_sp(g).report.worst_delay <= (g.depth_sp() + 1) * opt + 1e-9


def test_depth_bound_counterexample():
    tours = [
        Tour(0, 20.0, meeting_positions={1: 10.0, 2: 1.0}, base_position=0.0),
        Tour(1, 20.0, meeting_positions={0: 0.0, 2: 0.5}),
        Tour(2, 2.0, meeting_positions={0: 0.0, 1: 1.0}),
    ]
    g = TourGraph.from_tours(tours, 0)
    assert g.depth_sp() == 1
    sp = mdtd_sp(g).report.worst_delay
    opt = brute_force_optimal(g).report.worst_delay
    assert (sp, opt) == (30.0, 22.0)
    assert exhaustive_full_optimum(g, Direction) == 22.0
    assert sp > g.depth_sp() * opt


def test_random_tree_unique_spanning_tree():
    tree = random_tour_tree(np.random.default_rng(3), 6)
    trees = list(spanning_trees(tree.graph))
    assert trees == [dict(tree.parent)] or [dict(sorted(t.items())) for t in trees] == [dict(sorted(tree.parent.items()))]


def test_spanning_tree_count_of_complete_graph():
    tours = [Tour(v, 4.0, meeting_positions={w: 0.0 for w in range(4) if w != v}, base_position=0.0 if v == 0 else None)
             for v in range(4)]
    g = TourGraph.from_tours(tours, 0)
    assert sum(1 for _ in spanning_trees(g)) == 16  # Cayley: 4^(4-2)
    assert len(list(itertools.islice(spanning_trees(g), 3))) == 3
