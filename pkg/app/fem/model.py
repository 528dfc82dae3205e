"""Macro-scale model: mesh, boundary data, fixed conductivities and the design mask."""
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from .mesh import BoundaryConditions, MacroMesh
from .solver import ThermalState, assemble_and_solve


@dataclass
class MacroModel:
    mesh: MacroMesh
    bc: BoundaryConditions
    kappa: np.ndarray
    design_mask: np.ndarray
    matrix_kappa: float = 0.3162
    regions: Dict = field(default_factory=dict)
    name: Optional[str] = None

    def __post_init__(self):
        self.kappa = np.asarray(self.kappa, dtype=float)
        self.design_mask = np.asarray(self.design_mask, dtype=bool)
        if self.kappa.shape != (self.mesh.n_elements, 2):
            raise ValueError(f"base field must have shape ({self.mesh.n_elements}, 2), got {self.kappa.shape}")
        if self.design_mask.shape != (self.mesh.n_elements,):
            raise ValueError(f"design mask must have {self.mesh.n_elements} entries")
        self.bc.validate(self.mesh)

    @property
    def design_elements(self) -> np.ndarray:
        return np.flatnonzero(self.design_mask)

    @property
    def n_design(self) -> int:
        return int(self.design_mask.sum())

    def field_with(self, design_values) -> np.ndarray:
        """Full per-element field with `design_values` (nd, 2) written into the design elements."""
        design_values = np.asarray(design_values, dtype=float)
        if design_values.shape != (self.n_design, 2):
            raise ValueError(f"design values must have shape ({self.n_design}, 2), got {design_values.shape}")
        full = self.kappa.copy()
        full[self.design_mask] = design_values
        return full

    def initial_design(self) -> np.ndarray:
        return self.kappa[self.design_mask].copy()

    def solve(self, design_values=None) -> ThermalState:
        full = self.kappa if design_values is None else self.field_with(design_values)
        return assemble_and_solve(self.mesh, full, self.bc)

    def reference_model(self) -> "MacroModel":
        """Same mesh and boundary data, uniform matrix conductivity everywhere."""
        uniform = np.full((self.mesh.n_elements, 2), self.matrix_kappa)
        return replace(self, kappa=uniform, name=f"{self.name or 'model'}-reference")
