"""Thermal functionality objectives and adjoint sensitivities."""
from .functionals import (VARIANTS, CloakObjective, ConcentratorObjective, DegenerateProbeError,
                          ObjectiveError, ObjectiveSpec, RotatorObjective, WeightedObjective,
                          build_objective, eval_cloak, eval_concentrator, eval_rotator,
                          eval_weighted, grad_cloak, grad_concentrator, grad_rotator,
                          grad_weighted)
from .gradcheck import GradientCheck, check_gradient, write_gradient_csv
from .regions import (ProbePoints, RegionMask, cloak_query, disk_elements, exterior_nodes,
                      outside_nodes, probe_points, rectangle_elements, ring_elements)

__all__ = [
    "VARIANTS", "CloakObjective", "ConcentratorObjective", "DegenerateProbeError", "ObjectiveError",
    "ObjectiveSpec", "RotatorObjective", "WeightedObjective", "build_objective", "eval_cloak",
    "eval_concentrator", "eval_rotator", "eval_weighted", "grad_cloak", "grad_concentrator",
    "grad_rotator", "grad_weighted", "GradientCheck", "check_gradient", "write_gradient_csv",
    "ProbePoints", "RegionMask", "cloak_query", "disk_elements", "exterior_nodes", "outside_nodes",
    "probe_points", "rectangle_elements", "ring_elements",
]
