"""Unit-cell homogenization."""
from .cell import (CellSolution, PixelCell, SymmetryViolationError, effective_conductivity,
                   homogenize, read_pgm, solve_cell_problems, write_pgm)

__all__ = [
    "CellSolution", "PixelCell", "SymmetryViolationError", "effective_conductivity",
    "homogenize", "read_pgm", "solve_cell_problems", "write_pgm",
]
