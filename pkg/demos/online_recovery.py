"""
Robots finding their schedule, and finding it again
====================================================

Start the seven-tour tree from random positions, watch every robot settle
into the periodic schedule, then hold one robot for two time units and
see how long the delay takes to wash out.
"""

import numpy as np

from tourpatrol.instances import seven_tour_tree
from tourpatrol.scheduling import minimum_delay_schedule
from tourpatrol.simulator import init_world, run_disturbed

tree = seven_tour_tree()
sched, report = minimum_delay_schedule(tree)
L = max(t.length for t in tree.tours.values())
print("cycle", L, "tree depth", tree.depth(), "predicted worst delay", report.worst_delay)

rng = np.random.default_rng(0)
for trial in range(5):
    pos = {v: float(rng.uniform(0, tree.tours[v].length)) for v in sorted(tree.tours)}
    m = init_world(tree, sched.direction, pos).run(40 * L, 30 * L)
    print(f"trial {trial}: settled after {m.convergence_time / L:.2f} cycles, "
          f"WI {m.measured_WI:g}, WD {m.measured_WD:g}, longest wait {m.max_wait:.2f}")

# Hold robot 2 (a leaf) for two time units a while after the start
world = init_world(tree, sched.direction, record_trace=True)
at = 10 * L + 0.5
m = run_disturbed(world, [(at, 2, 2.0)], 40 * L, 30 * L)
print(f"\nafter the hold the schedule is back {(m.convergence_time - at) / L:.3f} cycles later")

# The parent of 2 waits for it once; everything downstream of that shifts
for e in world.trace:
    if at - 1 <= e.time <= at + 2 * L and e.kind in ("hold", "rendezvous", "deliver"):
        print(f"{e.time:8.2f}  robot {e.robot}  {e.kind:<10} {e.detail}")
