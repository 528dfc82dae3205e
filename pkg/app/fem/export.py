"""Text exports of macro-scale fields (legacy VTK and CSV)."""
import csv
from typing import Dict, Optional

import numpy as np

from .mesh import MacroMesh


def _header_line(header: Optional[str]) -> str:
    return f"# {header}\n" if header else ""


def write_vtk_temperature(path, mesh: MacroMesh, T: np.ndarray, header: str = "temperature field",
                          scalars: str = "temperature") -> None:
    """Legacy VTK STRUCTURED_POINTS, nodal scalars named `scalars`, x varying fastest."""
    T = np.asarray(T, dtype=float)
    if T.shape != (mesh.n_nodes,):
        raise ValueError(f"temperature field must have {mesh.n_nodes} values, got {T.shape}")
    lines = [
        "# vtk DataFile Version 3.0",
        header.replace("\n", " ")[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {mesh.nx + 1} {mesh.ny + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {mesh.h:.12g} {mesh.h:.12g} 1",
        f"POINT_DATA {mesh.n_nodes}",
        f"SCALARS {scalars} double 1",
        "LOOKUP_TABLE default",
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
        for value in T:
            f.write(f"{value:.12g}\n")


def write_flux_csv(path, mesh: MacroMesh, flux: np.ndarray, header: Optional[str] = None) -> None:
    ex, ey = mesh.element_indices()
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(_header_line(header))
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["ex", "ey", "fx", "fy"])
        for i in range(mesh.n_elements):
            writer.writerow([int(ex[i]), int(ey[i]), f"{flux[i, 0]:.12g}", f"{flux[i, 1]:.12g}"])


def write_nodal_csv(path, mesh: MacroMesh, T: np.ndarray, header: Optional[str] = None,
                    t_ref: Optional[np.ndarray] = None) -> None:
    """x, y, T per node; reshapes directly onto an (ny+1, nx+1) grid for contouring.

    With `t_ref` a fourth column dT = T - t_ref is added.
    """
    coords = mesh.coordinates()
    columns = ["x", "y", "T"]
    if t_ref is not None:
        columns.append("dT")
        diff = np.asarray(T, dtype=float) - np.asarray(t_ref, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(_header_line(header))
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for n, ((x, y), t) in enumerate(zip(coords, T)):
            row = [f"{x:.12g}", f"{y:.12g}", f"{t:.12g}"]
            if t_ref is not None:
                row.append(f"{diff[n]:.12g}")
            writer.writerow(row)


def centerline_row(mesh: MacroMesh, y: float) -> int:
    """Node row closest to height `y`; ties go to the lower row."""
    j = int(np.ceil(y / mesh.h - 0.5))
    return min(max(j, 0), mesh.ny)


def write_centerline_csv(path, mesh: MacroMesh, y: float, profiles: Dict[str, np.ndarray],
                         header: Optional[str] = None) -> None:
    """Nodal fields sampled along the node row nearest `y`, one column per profile."""
    j = centerline_row(mesh, y)
    nodes = np.array([mesh.node(i, j) for i in range(mesh.nx + 1)])
    columns = {name: np.asarray(values, dtype=float)[nodes] for name, values in profiles.items()}
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(_header_line(header))
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["x", "y"] + list(columns))
        for k in range(mesh.nx + 1):
            writer.writerow([f"{k * mesh.h:.12g}", f"{j * mesh.h:.12g}"]
                            + [f"{values[k]:.12g}" for values in columns.values()])
