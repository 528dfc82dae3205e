"""Design optimization against the functionality objectives."""
from .descent import (IterationRecord, ModelEvaluator, OptimizationError, OptimizationProblem,
                      OptimizationResult, optimize, projected_gradient)
from .records import read_design_csv, read_history_csv, write_design_csv, write_history_csv
from .scenarios import ScenarioError, build_model, build_problem, make_scenario, objective_spec

__all__ = [
    "IterationRecord", "ModelEvaluator", "OptimizationError", "OptimizationProblem",
    "OptimizationResult", "optimize", "projected_gradient", "read_design_csv", "read_history_csv", "write_design_csv",
    "write_history_csv", "ScenarioError", "build_model", "build_problem", "make_scenario",
    "objective_spec",
]
