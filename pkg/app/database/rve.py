"""
The (t1, t2, t3) unit-cell family.

t1 is the width of the solid strips on the left and right sides, t2 the width
of the strips on the bottom and top, and t3 the half-width of the two solid
diagonal bands. Every non-empty member touches all four cell edges, so
neighboring cells in an assembled structure always share solid pixels.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..homogenization import PixelCell

DEFAULT_CELL_SIZE = 50
STORED_DIGITS = 9


@dataclass(frozen=True, order=True)
class RveParams:
    t1: int
    t2: int
    t3: int

    def validate(self, n: int) -> None:
        for name, value in (("t1", self.t1), ("t2", self.t2), ("t3", self.t3)):
            if int(value) != value or not 0 <= value <= n // 2:
                raise ValueError(f"{name}={value} outside [0, {n // 2}] for a {n}x{n} cell")

    def as_tuple(self):
        return (self.t1, self.t2, self.t3)


def canonical(value: float) -> float:
    """Round to the precision the property file stores."""
    return float(f"{value:.{STORED_DIGITS}g}")


def generate_pixels(params: RveParams, n: int = DEFAULT_CELL_SIZE) -> PixelCell:
    if n < 2 or n % 2:
        raise ValueError(f"cell size must be a positive even number, got {n}")
    params.validate(n)
    t1, t2, t3 = params.as_tuple()
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    solid = (
        (i < t1) | (i >= n - t1)
        | (j < t2) | (j >= n - t2)
        | (np.abs(i - j) < t3)
        | (np.abs(i + j - (n - 1)) < t3)
    )
    return PixelCell(solid)


@dataclass
class RveRecord:
    index: int
    params: RveParams
    k11: float
    k22: float
    vf: float
    cell: Optional[PixelCell] = None

    def properties(self) -> np.ndarray:
        return np.array([self.k11, self.k22])

    def same_values(self, other: "RveRecord") -> bool:
        return (self.index, self.params, self.k11, self.k22, self.vf) == \
            (other.index, other.params, other.k11, other.k22, other.vf)
