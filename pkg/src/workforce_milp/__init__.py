"""
Workforce MILP - turns natural-language workforce scheduling problems into MILP models.

This package identifies modelling components in a problem description, extracts the
instance data with an LLM task by task, assembles a mixed-integer model by rule and
solves it with a built-in branch-and-bound solver.
"""

from .core.harness import compute_ea, run_trials
from .core.pipeline import Pipeline
from .core.solver import solve_milp

__version__ = "0.1.0"
__all__ = ["Pipeline", "compute_ea", "run_trials", "solve_milp"]
