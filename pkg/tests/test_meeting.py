import numpy as np
import pytest

from tourpatrol.grid import corridor_scenario
from tourpatrol.meeting import select_meeting_points
from tourpatrol.tours import StructureError, Tour, TourMultiGraph, validate


def test_single_candidate_is_chosen():
    tours = {0: Tour(0, 10.0, base_position=0.0), 1: Tour(1, 6.0)}
    g, trace = select_meeting_points(TourMultiGraph(tours, {(0, 1): [(3.0, 2.0)]}, 0))
    assert trace.chosen == {(0, 1): 0}
    assert g.tours[0].meet(1) == 3.0 and g.tours[1].meet(0) == 2.0


def test_closer_candidate_wins():
    tours = {0: Tour(0, 20.0, base_position=0.0), 1: Tour(1, 6.0)}
    mg = TourMultiGraph(tours, {(0, 1): [(5.0, 1.0), (2.0, 4.0)]}, 0)
    g, trace = select_meeting_points(mg)
    assert trace.candidate_distances[(0, 1)] == [5.0, 2.0]
    assert trace.chosen[(0, 1)] == 1 and trace.rationale[(0, 1)] == 2.0
    assert g.tours[0].meet(1) == 2.0


def test_ties_pick_smaller_position_on_lower_id_tour():
    tours = {0: Tour(0, 20.0, base_position=0.0), 1: Tour(1, 6.0)}
    mg = TourMultiGraph(tours, {(0, 1): [(17.0, 1.0), (3.0, 4.0)]}, 0)
    assert select_meeting_points(mg)[1].chosen[(0, 1)] == 1


def test_distances_route_through_earlier_choices():
    tours = {0: Tour(0, 20.0, base_position=0.0), 1: Tour(1, 10.0), 2: Tour(2, 10.0)}
    cands = {(0, 1): [(4.0, 0.0)], (1, 2): [(1.0, 0.0), (5.0, 0.0)]}
    g, trace = select_meeting_points(TourMultiGraph(tours, cands, 0))
    assert trace.order == [0, 1, 2]
    assert trace.candidate_distances[(1, 2)] == [5.0, 9.0]
    assert g.tours[1].meet(2) == 1.0
    assert validate(g) == []


def test_disconnected_multigraph_rejected():
    tours = {0: Tour(0, 10.0, base_position=0.0), 1: Tour(1, 6.0), 2: Tour(2, 6.0)}
    with pytest.raises(StructureError):
        select_meeting_points(TourMultiGraph(tours, {(0, 1): [(1.0, 1.0)]}, 0))


def test_corridor_meetings_lie_on_base_side():
    inst = corridor_scenario()
    g, trace = select_meeting_points(inst.multigraph)
    assert validate(g) == []
    walk = {st.id: st.walk for st in inst.subtours}
    base = inst.grid.base_cell
    assert set(trace.chosen) == set(inst.multigraph.candidates)
    for (a, b), idx in trace.chosen.items():
        cands = inst.multigraph.candidates[(a, b)]
        dist = [min(inst.metric.d(walk[a][int(p)], base), inst.metric.d(walk[b][int(q)], base)) for p, q in cands]
        assert dist[idx] == min(dist)


def test_greedy_choice_is_locally_optimal():
    rng = np.random.default_rng(4)
    tours = {v: Tour(v, float(rng.integers(4, 12)), base_position=0.0 if v == 0 else None) for v in range(5)}
    cands = {}
    for a in range(5):
        for b in range(a + 1, 5):
            if rng.random() < 0.6 or b == a + 1:
                cands[(a, b)] = [(float(rng.integers(0, int(tours[a].length))), float(rng.integers(0, int(tours[b].length))))
                                 for _ in range(3)]
    _, trace = select_meeting_points(TourMultiGraph(tours, cands, 0))
    for key, idx in trace.chosen.items():
        assert trace.candidate_distances[key][idx] == min(trace.candidate_distances[key])
