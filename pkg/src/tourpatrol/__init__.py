"""Cooperative data gathering over a tree of patrol tours."""

from .scheduling import (
    DelayReport,
    RepeatedSchedule,
    Schedule,
    evaluate_tree_delay,
    make_repeated_schedule,
    minimum_delay_schedule,
)
from .tours import Direction, DomainError, StructureError, Tour, TourGraph, TourTree, validate
from .treesel import SizeCapError, brute_force_optimal, mdtd_cg, mdtd_sp, solve

__version__ = "0.1.0"

__all__ = [
    "DelayReport", "Direction", "DomainError", "RepeatedSchedule", "Schedule", "SizeCapError",
    "StructureError", "Tour", "TourGraph", "TourTree", "brute_force_optimal", "evaluate_tree_delay",
    "make_repeated_schedule", "mdtd_cg", "mdtd_sp", "minimum_delay_schedule", "solve", "validate",
]
