import json

import numpy as np
import pytest

from tourpatrol.grid import corridor_scenario
from tourpatrol.instances import PAPER_FORMULA, gen_3sat_mdt, gen_chain_arms, parse_cnf, random_tour_graph, triangle_graph
from tourpatrol.scenario_io import (
    METRICS_COLUMNS,
    VERSION,
    FormatError,
    Scenario,
    Solution,
    dumps,
    load,
    loads,
    metrics_row,
    read_trace_csv,
    save,
    to_dot,
    trace_csv,
    write_csv,
)
from tourpatrol.simulator import init_world, run_disturbed
from tourpatrol.tours import Direction, DomainError, Tour, TourGraph
from tourpatrol.treesel import solve


def _scenarios():
    g, fixed = gen_3sat_mdt(parse_cnf(PAPER_FORMULA))
    yield Scenario(graph=g, fixed_directions=fixed, meta={"kind": "3sat"})
    chain = gen_chain_arms(3, 100.0, 1.0)
    yield Scenario(graph=chain, solution=Solution.from_result(solve(chain, "cg")))
    yield Scenario(graph=random_tour_graph(np.random.default_rng(2), 5, sensing="mixed"))
    inst = corridor_scenario()
    yield Scenario(multigraph=inst.multigraph, grid=inst.grid, subtours=inst.subtours)


@pytest.mark.parametrize("sc", list(_scenarios()), ids=["3sat", "chainarms", "random", "corridor"])
def test_round_trip_is_byte_stable(sc, tmp_path):
    text = dumps(sc)
    again = loads(text)
    assert dumps(again) == text
    path = tmp_path / "s.json"
    save(sc, path)
    assert path.read_text() == text
    back = load(path)
    assert back.n == sc.n and back.edge_count() == sc.edge_count()
    assert back.total_length() == pytest.approx(sc.total_length())


def test_round_trip_keeps_values():
    g, fixed = gen_3sat_mdt(parse_cnf(PAPER_FORMULA))
    back = loads(dumps(Scenario(graph=g, fixed_directions=fixed)))
    assert back.graph == g
    assert back.fixed_directions == fixed


def test_whole_numbers_are_written_as_integers():
    g = TourGraph.from_tours([Tour(0, 10.0, ((1.0, 2.5),), {}, 0.0)], 0)
    data = json.loads(dumps(Scenario(graph=g)))
    assert data["version"] == VERSION
    assert data["tours"][0] == {"id": 0, "length": 10, "base": 0, "meet": [], "sensing": [[1, 2.5]]}


def test_string_and_integer_ids_survive():
    tours = [Tour(0, 4.0, meeting_positions={"a": 1.0}, base_position=0.0), Tour("a", 4.0, meeting_positions={0: 2.0})]
    g = TourGraph.from_tours(tours, 0)
    sol = Solution.from_result(solve(g, "sp"))
    back = loads(dumps(Scenario(graph=g, solution=sol)))
    assert back.solution.parent == {"a": 0}
    assert back.solution.directions == sol.directions
    assert back.solution.tree(back.graph).depth() == 1


def test_scenario_holds_one_graph():
    with pytest.raises(DomainError):
        Scenario()
    g = triangle_graph()
    with pytest.raises(DomainError):
        Scenario(graph=g, multigraph=corridor_scenario().multigraph)


@pytest.mark.parametrize("text", [
    "not json",
    "[1, 2]",
    json.dumps({"version": "other/9"}),
    json.dumps({"version": VERSION, "kind": "graph"}),
    json.dumps({"version": VERSION, "kind": "blob", "tours": [], "v0": 0}),
    json.dumps({"version": VERSION, "kind": "graph", "v0": 0, "tours": [{"id": 0, "length": 3, "base": 0}],
                "fixed_directions": [[0, "up"]]}),
    json.dumps({"version": VERSION, "kind": "graph", "v0": 1.5, "tours": []}),
])
def test_malformed_files_raise_format_error(text):
    with pytest.raises(FormatError):
        loads(text)


def test_dot_marks_tree_arcs():
    g = triangle_graph()
    sol = Solution.from_result(solve(g, "sp"))
    dot = to_dot(g, sol)
    assert dot.startswith("graph tours {") and dot.endswith("}\n")
    assert dot.count("dir=forward") == 2
    assert dot.count("style=dashed") == 1
    assert to_dot(g).count("style=dashed") == 3


def test_metrics_csv():
    g = triangle_graph()
    res = solve(g, "cg")
    sol = Solution.from_result(res)
    m = init_world(res.tree, res.directions).run(100.0, 50.0)
    text = write_csv([metrics_row("cg", g.n, sol, m)], METRICS_COLUMNS)
    header, row = text.splitlines()
    assert header.split(",") == METRICS_COLUMNS
    assert row.split(",")[0:2] == ["cg", "3"]
    assert float(row.split(",")[5]) == pytest.approx(sol.worst_delay)


def test_trace_csv_round_trip():
    res = solve(triangle_graph(), "sp")
    world = init_world(res.tree, res.directions, record_trace=True)
    run_disturbed(world, [(5.0, 1, 2.0)], 40.0)
    back = read_trace_csv(trace_csv(world.trace), ids=list(res.tree.tours))
    assert back == world.trace
    assert any(e.kind == "hold" for e in back)


def test_direction_values_in_file():
    g = triangle_graph()
    sol = Solution.from_result(solve(g, "opt"))
    data = json.loads(dumps(Scenario(graph=g, solution=sol)))
    assert {d for _, d in data["solution"]["directions"]} <= {Direction.CW.value, Direction.CCW.value}
