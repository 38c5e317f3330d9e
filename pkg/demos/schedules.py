"""
Directions, waits and the repeated schedule
============================================

A small walk through the scheduling layer: pick travel directions for a
fixed tour tree, look at the resulting waits and check the numbers against
a brute-force run over every direction assignment.
"""

import itertools

from tourpatrol.instances import seven_tour_tree, two_tour_example
from tourpatrol.scheduling import evaluate_tree_delay, make_repeated_schedule, minimum_delay_schedule
from tourpatrol.tours import Direction, TourTree

# Two tours: A (length 10) holds the base at 0 and meets B at 3.
# B (length 6) meets A at its own position 0.
tree = TourTree(two_tour_example(), {"B": "A"})
sched, report = minimum_delay_schedule(tree)
print(sched.table())
print("worst delay", report.worst_delay, "worst idleness", report.worst_idleness)

# Every one of the four direction pairs, for comparison
for dirs in itertools.product(Direction, repeat=2):
    d = dict(zip(("A", "B"), dirs))
    print({k: v.value for k, v in d.items()}, evaluate_tree_delay(tree, d).worst_delay)

# A deeper tree with seven tours
tree = seven_tour_tree()
sched, report = minimum_delay_schedule(tree)
print()
print(sched.table())
print("worst delay", report.worst_delay)

# Repeating the schedule: every tour waits so that one loop takes as long
# as the longest tour, which then sets the worst idleness.
rep = make_repeated_schedule(sched)
print("longest tour", rep.vbar, "worst idleness", rep.worst_idleness)
