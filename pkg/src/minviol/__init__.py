"""Minimum-violation motion planning with prioritized safety rules.

Rules are stutter-invariant finite-trace formulas ``G P`` over region
propositions.  Trajectories of a Dubins car are abstracted into a weighted
Kripke structure grown by RRG or RRT* connections; edge weights are
lexicographic vectors of per-class violation levels followed by travel time.
"""

from .fltl import GFormula, GXFormula, denext, parse, parse_g, parse_gx, to_text
from .unsafety import PrioritizedSpec, Rule, TimedLetter, TimedWord, level_of_unsafety, unsafety_vector
from .world import Mode, Pose, Region, Vehicle, WorldModel
from .dynamics import Trajectory, steer, timed_word
from .kripke import ConnectionStrategy, Variant, WeightedKripke, grow
from .search import PlanningSession, Trace, extract_optimal, replan_step

__version__ = "0.1.0"

__all__ = [
    "GFormula",
    "GXFormula",
    "denext",
    "parse",
    "parse_g",
    "parse_gx",
    "to_text",
    "PrioritizedSpec",
    "Rule",
    "TimedLetter",
    "TimedWord",
    "level_of_unsafety",
    "unsafety_vector",
    "Mode",
    "Pose",
    "Region",
    "Vehicle",
    "WorldModel",
    "Trajectory",
    "steer",
    "timed_word",
    "ConnectionStrategy",
    "Variant",
    "WeightedKripke",
    "grow",
    "PlanningSession",
    "Trace",
    "extract_optimal",
    "replan_step",
]
