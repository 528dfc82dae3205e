"""Database substitution and heterostructure assembly."""
from .substitute import (AssemblyError, AssemblyResult, rasterize, substitute, substitution_metrics,
                         verify_assembled, write_raster_pgm, write_raster_png, write_scatter_csv)

__all__ = [
    "AssemblyError", "AssemblyResult", "rasterize", "substitute", "substitution_metrics",
    "verify_assembled", "write_raster_pgm", "write_raster_png", "write_scatter_csv",
]
