"""LP-format model of the tree/direction selection problem.

Multi-commodity flow formulation: vertex 0 is a virtual base tour attached
to ``v0``; every tour ``c`` receives one unit of commodity ``c`` sent from
vertex 0 along the selected tree.  A flow on arc ``(i, j)`` means that ``j``
forwards its data to ``i``.  The delay of commodity ``c`` sums the own
delay of ``c`` and the travel on each relaying tour, selected by binary
direction variables.  All products of binaries are linearized.

Variables (tours are renumbered ``1..n`` in sorted id order, listed in the
header comment):

- ``x_i_j``              arc (i, j) is in the tree
- ``f_i_j_c``            flow of commodity c on arc (i, j)
- ``u_j_cw``, ``u_j_ccw``  direction of tour j
- ``g_j_c_d``            f_j_c_c * u_c_d (own delay of c in direction d)
- ``t_i_j_k_c_d``        f_i_j_c * f_j_k_c * u_j_d
- ``z_c``, ``z``         per-commodity delay and the maximum
"""

from __future__ import annotations

from .tours import BOTH_DIRECTIONS, StructureError, TourGraph, own_delay, travel_time

_WRAP = 12


def _fmt(x: float) -> str:
    return repr(float(x)) if x != int(x) else str(int(x))


def _expr(terms) -> str:
    """``terms`` is a list of (coefficient, variable); wrapped for line-length limits."""
    parts = []
    for k, (coef, var) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_fmt(mag)} {var}"
        parts.append(f"{sign} {body}" if k or sign == "-" else body)
    lines = [" ".join(parts[i:i + _WRAP]) for i in range(0, len(parts), _WRAP)]
    return "\n   ".join(lines)


def _row(name: str, terms, sense: str, rhs: float) -> str:
    return f" {name}: {_expr(terms)} {sense} {_fmt(rhs)}"


def model_arcs(graph: TourGraph) -> tuple[dict, list]:
    """Index map (tour id -> 1..n) and the arc list including the virtual base arcs."""
    index = {v: k for k, v in enumerate(graph.ids(), start=1)}
    arcs = [(0, index[graph.v0]), (index[graph.v0], 0)]
    for a, b in graph.sorted_edges():
        arcs.append((index[a], index[b]))
        arcs.append((index[b], index[a]))
    return index, sorted(arcs)


def emit_milp(graph: TourGraph) -> str:
    if not graph.is_connected():
        raise StructureError("tour graph is disconnected")
    index, arcs = model_arcs(graph)
    tour_of = {k: v for v, k in index.items()}
    n = graph.n
    verts = list(range(n + 1))
    comms = list(range(1, n + 1))
    out_arcs = {v: [a for a in arcs if a[0] == v] for v in verts}
    in_arcs = {v: [a for a in arcs if a[1] == v] for v in verts}

    def x(a):
        return f"x_{a[0]}_{a[1]}"

    def f(a, c):
        return f"f_{a[0]}_{a[1]}_{c}"

    def pos(j, other):
        """Position on tour j of its meeting with index ``other`` (0 = base)."""
        t = graph.tours[tour_of[j]]
        return t.base_position if other == 0 else t.meet(tour_of[other])

    rows, binaries = [], []
    objective_terms = [(1, "z")]

    # flow conservation
    for c in comms:
        terms = [(1, f(a, c)) for a in in_arcs[0]] + [(-1, f(a, c)) for a in out_arcs[0]]
        rows.append(_row(f"source_{c}", terms, "=", -1))
        for v in verts:
            if v in (0, c):
                continue
            terms = [(1, f(a, c)) for a in in_arcs[v]] + [(-1, f(a, c)) for a in out_arcs[v]]
            rows.append(_row(f"conserve_{v}_{c}", terms, "=", 0))
        terms = [(1, f(a, c)) for a in in_arcs[c]] + [(-1, f(a, c)) for a in out_arcs[c]]
        rows.append(_row(f"sink_{c}", terms, "=", 1))
    # capacity: one row per (arc, commodity)
    for a in arcs:
        for c in comms:
            rows.append(_row(f"cap_{a[0]}_{a[1]}_{c}", [(1, f(a, c)), (-1, x(a))], "<=", 0))
    rows.append(_row("tree_size", [(1, x(a)) for a in arcs], "=", n))
    # directions
    for j in comms:
        rows.append(_row(f"dir_{j}", [(1, f"u_{j}_ccw"), (1, f"u_{j}_cw")], "=", 1))
        binaries += [f"u_{j}_ccw", f"u_{j}_cw"]

    # delay of each commodity
    linear_rows = []
    for c in comms:
        tour_c = graph.tours[tour_of[c]]
        terms = [(1, f"z_{c}")]
        for a in in_arcs[c]:
            j = a[0]
            for d in BOTH_DIRECTIONS:
                own = own_delay(tour_c, pos(c, j), d)
                if own == float("-inf") or own == 0:
                    continue
                g = f"g_{j}_{c}_{d.value}"
                terms.append((-own, g))
                linear_rows += [
                    _row(f"{g}_a", [(1, g), (-1, f(a, c))], "<=", 0),
                    _row(f"{g}_b", [(1, g), (-1, f"u_{c}_{d.value}")], "<=", 0),
                    _row(f"{g}_c", [(1, g), (-1, f(a, c)), (-1, f"u_{c}_{d.value}")], ">=", -1),
                ]
        for j in comms:
            if j == c:
                continue
            tour_j = graph.tours[tour_of[j]]
            for a_in in in_arcs[j]:
                i = a_in[0]
                for a_out in out_arcs[j]:
                    k = a_out[1]
                    if k == i or k == 0:
                        continue
                    for d in BOTH_DIRECTIONS:
                        dist = travel_time(tour_j, pos(j, k), pos(j, i), d)
                        if dist == 0:
                            continue
                        t = f"t_{i}_{j}_{k}_{c}_{d.value}"
                        terms.append((-dist, t))
                        u = f"u_{j}_{d.value}"
                        linear_rows += [
                            _row(f"{t}_a", [(1, t), (-1, f(a_in, c))], "<=", 0),
                            _row(f"{t}_b", [(1, t), (-1, f(a_out, c))], "<=", 0),
                            _row(f"{t}_c", [(1, t), (-1, u)], "<=", 0),
                            _row(f"{t}_d", [(1, t), (-1, f(a_in, c)), (-1, f(a_out, c)), (-1, u)], ">=", -2),
                        ]
        rows.append(_row(f"delay_{c}", terms, "=", 0))
        if tour_c.senses:
            rows.append(_row(f"worst_{c}", [(1, f"z_{c}"), (-1, "z")], "<=", 0))
    rows += linear_rows
    binaries = [x(a) for a in arcs] + binaries

    header = ["\\ tree and direction selection model", f"\\ tours: {n}, arcs: {len(arcs)}",
              "\\ index 0: virtual base tour"]
    header += [f"\\ index {k}: tour {tour_of[k]!r}" for k in comms]
    bounds = [f" {f(a, c)} >= 0" for a in arcs for c in comms]
    text = header + ["Minimize", f" obj: {_expr(objective_terms)}", "Subject To"] + rows
    text += ["Bounds"] + bounds + ["Binaries"] + [f" {b}" for b in binaries] + ["End", ""]
    return "\n".join(text)


def count_rows(text: str, prefix: str) -> int:
    return sum(1 for line in text.splitlines() if line.startswith(f" {prefix}"))
