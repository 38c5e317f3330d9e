"""
Choosing a tree: shortest paths, the converted graph and the exact search
==========================================================================

Three ways to turn a tour graph into a tree, compared on the seven-tour
example graph and on a chain of large tours with cheap side arms.
"""

from pathlib import Path

from tourpatrol.instances import converted_example_graph, gen_chain_arms
from tourpatrol.milp import emit_milp
from tourpatrol.treesel import brute_force_optimal, build_converted_graph, cg_lower_bound, mdtd_cg, mdtd_sp

g = converted_example_graph()

# The converted graph has one vertex per meeting point plus the base.
cg = build_converted_graph(g)
for a, b, w, tour, d in cg.edges():
    print(f"{cg.label(a):>5} - {cg.label(b):<5} {w:5g} along tour {tour} ({d.value})")

for name, res in [("sp", mdtd_sp(g)), ("cg", mdtd_cg(g)), ("opt", brute_force_optimal(g))]:
    print(name, "tree", dict(sorted(res.tree.parent.items())), "WD", res.report.worst_delay)
print("lower bound from shortest data routes:", cg_lower_bound(g))

# Large tours in a chain, each with an arm of small tours back to the base.
# Hop counts favour the chain; route lengths favour the arms.
for k in (2, 6, 10):
    chain = gen_chain_arms(k, 1000.0, 0.1)
    sp, c = mdtd_sp(chain).report.worst_delay, mdtd_cg(chain).report.worst_delay
    print(f"k={k:2d}: sp {sp:8.1f}  cg {c:8.1f}  ratio {sp / c:.3f}")

# The same selection problem as a mixed-integer model, for an external solver
out = Path("example_model.lp")
out.write_text(emit_milp(g))
print("model written to", out, f"({len(out.read_text().splitlines())} lines)")
