"""Macro-scale finite-element machinery."""
from .mesh import (BoundaryConditionError, BoundaryConditions, MacroMesh, edge_nodes,
                   full_edge_bc, segment_nodes)
from .model import MacroModel
from .solver import (KAPPA_FLOOR, OrthotropicConductivity, SolverError, ThermalState,
                     assemble_and_solve, boundary_flux_balance, element_stiffness,
                     global_stiffness, heat_flux)

__all__ = [
    "BoundaryConditionError", "BoundaryConditions", "MacroMesh", "edge_nodes", "full_edge_bc",
    "segment_nodes", "MacroModel", "KAPPA_FLOOR", "OrthotropicConductivity", "SolverError",
    "ThermalState", "assemble_and_solve", "boundary_flux_balance", "element_stiffness",
    "global_stiffness", "heat_flux",
]
