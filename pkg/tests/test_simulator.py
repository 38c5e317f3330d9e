import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import full_tree_delay
from tourpatrol.instances import five_tour_chain, random_tour_tree, seven_tour_tree, single_tour, two_tour_example
from tourpatrol.scheduling import evaluate_tree_delay, minimum_delay_schedule
from tourpatrol.simulator import (
    MachineState,
    SingleHopRoute,
    default_window,
    disturbances_from_trace,
    init_world,
    inject_disturbance,
    run,
    run_disturbed,
    run_single_hop,
    sample_positions,
    step,
)
from tourpatrol.tours import Direction, DomainError, StructureError, Tour, TourTree

CW, CCW = Direction.CW, Direction.CCW


def _two_tour_tree():
    return TourTree(two_tour_example(), {"B": "A"})


def _child_waits(world, child):
    """Time the parent spent stopped for ``child`` at each rendezvous."""
    out, stop = [], None
    for e in world.trace:
        if e.kind == "stop" and e.detail == str(child):
            stop = e.time
        elif e.kind == "rendezvous" and e.detail == str(child):
            out.append(e.time - stop)
    return out


def test_robots_at_start_enter_at_wait_immediately():
    world = init_world(seven_tour_tree(), record_trace=True)
    world.next_time()
    assert all(r.machine_state is not MachineState.INIT for r in world.robots.values())
    assert sum(1 for e in world.trace if e.kind == "init_done" and e.time == 0.0) == 7


def test_single_robot_starts_moving():
    world = init_world(TourTree(single_tour(10.0), {}))
    step(world)
    assert world.robots[0].machine_state is MachineState.MOVING


def test_staggered_chain_finishes_init_at_distinct_times():
    tree = five_tour_chain()
    dirs = minimum_delay_schedule(tree)[0].direction
    assert set(dirs.values()) == {CW}
    positions = {1: 0.0, 2: 1.0, 3: 3.0, 4: 6.5, 5: 9.0}
    world = init_world(tree, dirs, positions, record_trace=True)
    world.run(50.0)
    done = {e.robot: e.time for e in world.trace if e.kind == "init_done"}
    # clockwise travel back to position 0 takes exactly the starting position
    assert done == positions
    assert len(set(done.values())) == 5


def test_bad_initial_position_rejected():
    with pytest.raises(DomainError):
        init_world(_two_tour_tree(), initial_positions={"B": 6.0})
    with pytest.raises(ValueError):
        init_world(_two_tour_tree(), resync="later")


def test_two_tour_example_measured_delay():
    tree = _two_tour_tree()
    m = run(init_world(tree), horizon=50.0, warmup=20.0)
    assert m.measured_WD == pytest.approx(10.0, abs=1e-9)
    assert m.measured_WI == pytest.approx(10.0, abs=1e-9)
    assert not m.short_horizon and not m.not_converged


def test_single_tour_metrics():
    m = run(init_world(TourTree(single_tour(10.0), {})), 50.0, 10.0)
    assert m.measured_WI == 10.0 and m.measured_WD == 10.0
    assert m.sum_distance == pytest.approx(40.0)


def test_seven_tour_tree_matches_analytic_delay():
    tree = seven_tour_tree()
    sched, report = minimum_delay_schedule(tree)
    warmup, horizon = default_window(tree)
    m = run(init_world(tree, sched.direction), horizon, warmup)
    assert m.measured_WD == pytest.approx(report.worst_delay, abs=1e-9)
    assert m.measured_WI == pytest.approx(max(t.length for t in tree.tours.values()), abs=1e-9)


def test_cold_start_flags_transient():
    tree = seven_tour_tree()
    m = run(init_world(tree, initial_positions={2: 1.0}), 30.0, 0.0)
    assert m.not_converged
    m = run(init_world(tree), 5.0, 0.0)
    assert m.short_horizon


def test_zero_disturbance_is_a_no_op():
    tree = seven_tour_tree()
    a = init_world(tree, record_trace=True)
    b = inject_disturbance(init_world(tree, record_trace=True), 2, 0.0)
    assert run(a, 100.0, 40.0) == run(b, 100.0, 40.0)
    assert a.trace == b.trace
    with pytest.raises(DomainError):
        inject_disturbance(a, 2, -1.0)


def test_disturbed_leaf_delays_parent_by_exactly_the_hold():
    tree = seven_tour_tree()
    L = 12.0
    calm = init_world(tree, record_trace=True)
    calm.run(20 * L)
    late = init_world(tree, record_trace=True)
    run_disturbed(late, [(5 * L, 2, 2.0)], 20 * L)
    before, after = _child_waits(calm, 2), _child_waits(late, 2)
    diff = [b - a for a, b in zip(before, after)]
    assert [d for d in diff if abs(d) > 1e-9] == [pytest.approx(2.0)]


def test_large_disturbance_still_converges():
    tree = seven_tour_tree()
    world = init_world(tree)
    m = run_disturbed(world, [(3 * 12.0, 7, 40.0)], 40 * 12.0, 20 * 12.0)
    assert math.isfinite(m.convergence_time) and not m.not_converged
    assert m.measured_WI == pytest.approx(12.0)
    assert all(r.delta_t == 0.0 or r.machine_state is MachineState.MOVING for r in world.robots.values())


def test_replay_of_recorded_holds_reproduces_the_run():
    tree = seven_tour_tree()
    a = init_world(tree, record_trace=True)
    ma = run_disturbed(a, [(25.0, 4, 3.0), (61.5, 7, 1.0)], 200.0, 100.0)
    schedule = disturbances_from_trace(a.trace)
    assert [(r, d) for _, r, d in schedule] == [(4, 3.0), (7, 1.0)]
    b = init_world(tree, record_trace=True)
    mb = run_disturbed(b, schedule, 200.0, 100.0)
    assert ma == mb and a.trace == b.trace


def test_runs_are_deterministic():
    tree = random_tour_tree(np.random.default_rng(7), 6, sensing="mixed")
    pos = {v: t.length / 3 for v, t in tree.tours.items()}
    a = run(init_world(tree, initial_positions=pos), 300.0, 150.0)
    b = run(init_world(tree, initial_positions=pos), 300.0, 150.0)
    assert a == b


def test_horizon_must_exceed_warmup():
    with pytest.raises(DomainError):
        run(init_world(_two_tour_tree()), 10.0, 10.0)


def test_every_delivered_item_is_held_by_nobody():
    world = init_world(seven_tour_tree())
    world.run(100.0)
    for it in world.items:
        if it.arrival_time is not None:
            assert it.holders == set() and it.arrival_time >= it.capture_time
        else:
            assert len(it.holders) == 1


def test_sample_positions():
    t = Tour(0, 10.0, ((2.0, 4.5),), {1: 3.25}, None)
    assert sample_positions(t).tolist() == [2.0, 3.0, 3.25, 4.0, 4.5]
    assert sample_positions(Tour(0, 5.0, ())).size == 0
    assert sample_positions(Tour(0, 5.0, sensing_points=(3.0, 1.0))).tolist() == [1.0, 3.0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_measured_delay_matches_analytic_on_random_trees(seed, n):
    rng = np.random.default_rng(seed)
    tree = random_tour_tree(rng, n, integer=True, length_range=(1, 20))
    dirs = {v: (CW if rng.random() < 0.5 else CCW) for v in tree.tours}
    analytic = evaluate_tree_delay(tree, dirs).worst_delay
    assert analytic == pytest.approx(full_tree_delay(tree.graph, tree.parent, dirs))
    warmup, horizon = default_window(tree)
    m = run(init_world(tree, dirs), horizon, warmup)
    assert m.measured_WD == pytest.approx(analytic, abs=1e-9)
    assert m.measured_WI == pytest.approx(max(t.length for t in tree.tours.values()), abs=1e-9)


def test_single_hop_through_base_matches_cooperative_single_tour():
    tour = single_tour(10.0).tours[0]
    coop = run(init_world(TourTree(single_tour(10.0), {})), 50.0, 10.0)
    solo = run_single_hop([SingleHopRoute.from_tour(tour)], 50.0, 10.0)
    assert (solo.measured_WI, solo.measured_WD) == (coop.measured_WI, coop.measured_WD)


def test_single_hop_needs_a_base_passage():
    with pytest.raises(StructureError):
        SingleHopRoute.from_tour(Tour(1, 4.0))
    with pytest.raises(StructureError):
        run_single_hop([SingleHopRoute(1, 4.0, (0.0,), ())], 10.0)


def test_single_hop_delay_with_two_base_passages():
    route = SingleHopRoute(0, 10.0, tuple(float(i) for i in range(10)), (0.0, 5.0))
    m = run_single_hop([route], 60.0, 20.0)
    assert m.measured_WI == 10.0 and m.measured_WD == 5.0
