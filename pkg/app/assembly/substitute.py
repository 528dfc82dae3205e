"""
Database substitution and heterostructure assembly.

Each optimized (k11, k22) pair is replaced by the nearest database record
(L1 distance, lowest index on ties). Substitution quality is reported as the
mean squared error and the coefficient of determination over the design
elements, treating each pair as one stacked vector.
"""
import csv
import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..database import DatabaseError, RveDatabase
from ..fem.model import MacroModel
from ..homogenization import PixelCell

logger = logging.getLogger(__name__)


class AssemblyError(Exception):
    pass


@dataclass
class AssemblyResult:
    elements: np.ndarray
    indices: np.ndarray
    l1: np.ndarray
    optimized: np.ndarray
    substituted: np.ndarray
    mse: float
    r2: float

    def scatter_rows(self):
        for e, opt, sub, d in zip(self.elements, self.optimized, self.substituted, self.l1):
            yield int(e), opt[0], opt[1], sub[0], sub[1], d


def substitution_metrics(optimized: np.ndarray, substituted: np.ndarray):
    """(MSE, R^2); R^2 is 1 for a perfect match even when the optimized values have no spread."""
    residual = float(np.sum((optimized - substituted) ** 2))
    total = float(np.sum((optimized - optimized.mean(axis=0)) ** 2))
    mse = residual / optimized.shape[0]
    if total == 0.0:
        r2 = 1.0 if residual == 0.0 else 0.0
    else:
        r2 = 1.0 - residual / total
    return mse, r2


def substitute(design: np.ndarray, db: RveDatabase, elements: Optional[np.ndarray] = None) -> AssemblyResult:
    design = np.asarray(design, dtype=float).reshape(-1, 2)
    if design.shape[0] == 0:
        raise AssemblyError("design set is empty")
    if len(db) == 0:
        raise AssemblyError("database is empty")
    if elements is None:
        elements = np.arange(design.shape[0])
    indices, dist = db.nearest_indices(design)
    substituted = db.properties[indices]
    mse, r2 = substitution_metrics(design, substituted)
    logger.info("Substituted %d elements with %d distinct cells: MSE = %.3e, R^2 = %.6f",
                design.shape[0], np.unique(indices).size, mse, r2)
    return AssemblyResult(np.asarray(elements, dtype=int), indices, dist, design, substituted, mse, r2)


def rasterize(model: MacroModel, result: AssemblyResult, db: RveDatabase,
              background: Optional[PixelCell] = None) -> np.ndarray:
    """(ny*n, nx*n) boolean image, row 0 at the bottom of the structure.

    Design elements take their substituted cells. Non-design elements holding
    the matrix conductivity take `background` (the 50% circular-hole cell by
    default); other non-design elements take the nearest database cell.
    """
    n = db.n
    mesh = model.mesh
    background = background or PixelCell.circular_hole(n)
    if background.n != n:
        raise AssemblyError(f"background cell is {background.n}x{background.n}, database cells are {n}x{n}")

    cell_of = np.full(mesh.n_elements, -1, dtype=int)
    cell_of[result.elements] = result.indices
    fixed = np.flatnonzero(cell_of < 0)
    on_matrix = np.all(np.isclose(model.kappa[fixed], model.matrix_kappa, rtol=0, atol=1e-12), axis=1)
    others = fixed[~on_matrix]
    if others.size:
        cell_of[others], _ = db.nearest_indices(model.kappa[others])
    cell_of[fixed[on_matrix]] = -1

    grids: Dict[int, np.ndarray] = {-1: background.grid}
    image = np.zeros((mesh.ny * n, mesh.nx * n), dtype=bool)
    ex, ey = mesh.element_indices()
    for e in range(mesh.n_elements):
        idx = int(cell_of[e])
        if idx not in grids:
            try:
                grids[idx] = db.cell(idx).grid
            except DatabaseError as err:
                raise AssemblyError(f"element {e}: {err}")
        image[ey[e] * n:(ey[e] + 1) * n, ex[e] * n:(ex[e] + 1) * n] = grids[idx]
    return image


def verify_assembled(model: MacroModel, result: AssemblyResult, objective) -> float:
    """Objective value with the substituted properties in place of the optimized ones."""
    full = model.kappa.copy()
    full[result.elements] = result.substituted
    design_values = full[model.design_mask]
    return float(objective.value(model.solve(design_values)))


def write_scatter_csv(path, result: AssemblyResult, header: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header:
            f.write(f"# {header}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["element", "opt_k11", "opt_k22", "sub_k11", "sub_k22", "l1"])
        for e, o11, o22, s11, s22, d in result.scatter_rows():
            writer.writerow([e, f"{o11:.12g}", f"{o22:.12g}", f"{s11:.9g}", f"{s22:.9g}", f"{d:.12g}"])


def write_raster_pgm(path, image: np.ndarray) -> None:
    """Binary graymap, top image row = top of the structure."""
    pixels = np.flipud(image).astype(np.uint8) * 255
    with open(path, "wb") as f:
        f.write(f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def write_raster_png(path, image: np.ndarray) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.imsave(path, np.flipud(image).astype(np.uint8), cmap="gray", vmin=0, vmax=1)
