"""
Cooperative relaying against single-hop delivery
=================================================

The corridor layout first: eight ring tours, a wall that only opens on the
left, and the base in the lower-left corner.  Then a sweep over robot
counts on an open 20 x 60 grid, plotted if matplotlib is around.

Pass ``--quick`` for a smaller sweep.
"""

import sys

from tourpatrol.experiments import SINGLE_HOP, compare_instance, grid_sweep, orderings
from tourpatrol.grid import ascii_map, corridor_scenario

inst = corridor_scenario()
print(ascii_map(inst.grid, inst.subtours))

rows = compare_instance(inst, ["cg", "sp", SINGLE_HOP], "corridor", 0)
print(f"{'method':<10} {'WI':>6} {'WD':>6} {'distance':>9}")
for r in rows:
    print(f"{r.method:<10} {r.WI_measured:6g} {r.WD_measured:6g} {r.sum_distance:9g}")

# Robot counts 2..20 on an open grid: five seeds, or one with --quick
quick = "--quick" in sys.argv
ns = range(2, 21, 3) if quick else range(2, 21)
seeds = (0,) if quick else range(5)
sweep = grid_sweep(20, 60, ns=ns, seeds=seeds, methods=("cg", SINGLE_HOP), workers=4)
cells = orderings(sweep, "cg")
print(f"\n{sum(o.all_ok for o in cells)} of {len(cells)} cells keep all three orderings")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
for method, style in (("cg", "o-"), (SINGLE_HOP, "s--")):
    for ax, field in zip(axes, ("WI_measured", "WD_measured", "sum_distance")):
        xs = sorted({r.n for r in sweep})
        ys = [sum(getattr(r, field) for r in sweep if r.n == n and r.method == method)
              / sum(1 for r in sweep if r.n == n and r.method == method) for n in xs]
        ax.plot(xs, ys, style, label=method)
        ax.set_title(field)
        ax.set_xlabel("robots")
axes[0].legend()
fig.tight_layout()
fig.savefig("sweep.png", dpi=120)
print("plot written to sweep.png")
