"""RVE family generation and the property database."""
from .rve import RveParams, RveRecord, generate_pixels
from .store import (DatabaseError, DatabaseParseError, RveDatabase, build_database,
                    enumerate_unique_cells, load, nearest, save)

__all__ = [
    "RveParams", "RveRecord", "generate_pixels", "DatabaseError", "DatabaseParseError",
    "RveDatabase", "build_database", "enumerate_unique_cells", "load", "nearest", "save",
]
