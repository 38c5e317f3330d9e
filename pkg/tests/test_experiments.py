import math

import pytest

from tourpatrol import experiments
from tourpatrol.experiments import (
    SINGLE_HOP,
    ComparisonRow,
    compare_instance,
    grid_sweep,
    orderings,
    single_hop_delay,
)
from tourpatrol.grid import corridor_scenario
from tourpatrol.simulator import SingleHopRoute, run_single_hop
from tourpatrol.tours import StructureError


def _row(method, wi, wd, dist, n=2, seed=0):
    return ComparisonRow("s", method, n, seed, wi, wi, wd, wd, 0.0, dist)


def test_columns_follow_field_order():
    assert ComparisonRow.columns()[:4] == ["scenario", "method", "n", "seed"]
    assert ComparisonRow.columns()[-1] == "status"
    assert _row("cg", 1.0, 2.0, 3.0).as_dict()["status"] == "ok"


def test_single_hop_delay_matches_simulation():
    route = SingleHopRoute(0, 12.0, (0.0, 2.0, 5.0, 9.0), (3.0, 10.0))
    # data sensed at 5 waits until the passage at 10
    assert single_hop_delay(route) == 5.0
    m = run_single_hop([route], 120.0, 60.0)
    assert m.measured_WD == pytest.approx(single_hop_delay(route))


def test_orderings():
    rows = [_row("cg", 10.0, 30.0, 50.0), _row("sp", 10.0, 20.0, 60.0), _row(SINGLE_HOP, 20.0, 25.0, 55.0),
            _row("cg", 5.0, 5.0, 5.0, n=3)]
    out = orderings(rows)
    assert [(o.method, o.wi_ok, o.wd_ok, o.distance_ok) for o in out] == [
        ("cg", True, True, True), ("sp", True, False, False)]
    assert out[0].strict and out[0].all_ok and not out[1].all_ok
    assert [o.method for o in orderings(rows, "sp")] == ["sp"]


def test_corridor_is_strict_for_every_method():
    rows = compare_instance(corridor_scenario(), ["cg", "sp", SINGLE_HOP], "corridor", 0)
    assert [r.method for r in rows] == ["cg", "sp", SINGLE_HOP]
    for r in rows[:2]:
        assert r.WI_measured == r.WI_analytic
        assert r.WD_measured == pytest.approx(r.WD_analytic)
    assert rows[2].status == "ok"
    res = orderings(rows)
    assert len(res) == 2 and all(o.strict for o in res)


def test_unreachable_single_hop_is_marked(monkeypatch):
    def refuse(*args, **kwargs):
        raise StructureError("no way to the base")

    monkeypatch.setattr(experiments, "single_hop_tours", refuse)
    (row,) = compare_instance(corridor_scenario(), [SINGLE_HOP], "corridor", 0)
    assert row.status == "unbounded" and math.isinf(row.WD_measured)


def test_small_sweep_is_deterministic():
    a = grid_sweep(8, 10, ns=(2, 3), seeds=(0, 1), methods=("cg", SINGLE_HOP))
    b = grid_sweep(8, 10, ns=(2, 3), seeds=(0, 1), methods=("cg", SINGLE_HOP), workers=2)
    assert a == b
    assert len(a) == 2 * 2 * 2
    assert [(r.seed, r.n, r.method) for r in a[:2]] == [(0, 2, "cg"), (0, 2, SINGLE_HOP)]
