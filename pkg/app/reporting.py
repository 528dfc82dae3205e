"""
Run summaries and report figures.

`optimize` writes summary.json next to its CSV outputs; `report` reads it back
together with nodes.csv, flux.csv, centerline.csv and design.csv and renders the
temperature map (with isotherms), the T - T_ref difference, the element flux
field, the centerline profiles and the two optimized conductivity components.
The database scatter (k11 against k22, coloured by volume fraction) is drawn
from a loaded database.
"""
import csv
import json
import logging
import os
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .fem.solver import boundary_flux_balance
from .run_config import config_hash

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
ISOTHERM_LEVELS = 11


class ReportError(Exception):
    pass


def build_summary(problem, result, config: Dict[str, Any]) -> Dict[str, Any]:
    model = problem.model
    state = result.state
    inflow, outflow = boundary_flux_balance(model.mesh, state.kappa, state.T, model.bc)
    summary = {
        "scenario": config.get("scenario"),
        "config_hash": config_hash(config),
        "termination": result.termination,
        "iterations": result.iterations,
        "initial": {"objective": result.initial_value, "components": result.history[0].components},
        "final": {"objective": result.final_value, "components": result.history[-1].components},
        "design_range": {
            "k11": [float(result.design[:, 0].min()), float(result.design[:, 0].max())],
            "k22": [float(result.design[:, 1].min()), float(result.design[:, 1].max())],
        },
        "temperature_range": [float(state.T.min()), float(state.T.max())],
        "flux_balance": {
            "inflow": inflow,
            "outflow": outflow,
            "relative": abs(inflow - outflow) / max(abs(inflow), 1e-300),
        },
        "normalizers": dict(getattr(problem.objective, "normalizers", {}) or {}) or None,
    }
    if hasattr(problem.objective, "reversed_fraction"):
        summary["reversed_fraction"] = problem.objective.reversed_fraction(state)
    return summary


def write_summary(summary: Dict[str, Any], directory: str) -> str:
    path = os.path.join(directory, SUMMARY_FILE)
    tmp_path = path + ".tmp"
    with open(tmp_path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp_path, path)
    return path


def read_summary(directory: str) -> Dict[str, Any]:
    path = os.path.join(directory, SUMMARY_FILE)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise ReportError(f"cannot read run summary: {e}")
    except json.JSONDecodeError as e:
        raise ReportError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")


def _read_rows(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            return list(csv.DictReader(line for line in f if not line.startswith("#")))
    except OSError as e:
        raise ReportError(f"cannot read {path}: {e}")


def read_nodal_csv(path, nx: int, ny: int, column: str = "T") -> np.ndarray:
    """One nodes.csv column as an (ny+1, nx+1) grid, row 0 at y = 0."""
    rows = _read_rows(path)
    if len(rows) != (nx + 1) * (ny + 1):
        raise ReportError(f"{path}: expected {(nx + 1) * (ny + 1)} nodes, found {len(rows)}")
    if rows and column not in rows[0]:
        raise ReportError(f"{path}: no {column} column")
    return np.array([float(r[column]) for r in rows]).reshape(ny + 1, nx + 1)


def read_flux_csv(path, nx: int, ny: int) -> np.ndarray:
    """(ny, nx, 2) element flux grid from flux.csv."""
    rows = _read_rows(path)
    if len(rows) != nx * ny:
        raise ReportError(f"{path}: expected {nx * ny} elements, found {len(rows)}")
    grid = np.zeros((ny, nx, 2))
    for r in rows:
        grid[int(r["ey"]), int(r["ex"])] = float(r["fx"]), float(r["fy"])
    return grid


def read_centerline_csv(path) -> Dict[str, np.ndarray]:
    rows = _read_rows(path)
    if not rows:
        raise ReportError(f"{path}: no centerline samples")
    return {name: np.array([float(r[name]) for r in rows]) for name in rows[0]}


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_temperature(path, grid: np.ndarray, h: float = 1.0, title: Optional[str] = None) -> None:
    plt = _pyplot()
    ny, nx = grid.shape[0] - 1, grid.shape[1] - 1
    x = np.linspace(0.0, nx * h, nx + 1)
    y = np.linspace(0.0, ny * h, ny + 1)
    fig, ax = plt.subplots(figsize=(7.5, 5.0))
    image = ax.pcolormesh(x, y, grid, shading="gouraud", cmap="inferno")
    ax.contour(x, y, grid, levels=np.linspace(grid.min(), grid.max(), ISOTHERM_LEVELS),
               colors="white", linewidths=0.6)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, label="T")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_design(path, nx: int, ny: int, elements: np.ndarray, values: np.ndarray,
                  title: Optional[str] = None) -> None:
    """Both conductivity components over the mesh; non-design elements are left blank."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(12.0, 4.2))
    for comp, ax in enumerate(axes):
        field = np.full(nx * ny, np.nan)
        field[elements] = values[:, comp]
        image = ax.imshow(field.reshape(ny, nx), origin="lower", cmap="viridis", vmin=0.0, vmax=1.0)
        ax.set_title(f"k{comp + 1}{comp + 1}")
        fig.colorbar(image, ax=ax, shrink=0.8)
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_difference(path, grid: np.ndarray, h: float = 1.0, title: Optional[str] = None) -> None:
    """T - T_ref on a symmetric diverging scale; zero means the reference field is reproduced."""
    plt = _pyplot()
    ny, nx = grid.shape[0] - 1, grid.shape[1] - 1
    x = np.linspace(0.0, nx * h, nx + 1)
    y = np.linspace(0.0, ny * h, ny + 1)
    bound = max(float(np.abs(grid).max()), 1e-12)
    fig, ax = plt.subplots(figsize=(7.5, 5.0))
    image = ax.pcolormesh(x, y, grid, shading="gouraud", cmap="RdBu_r", vmin=-bound, vmax=bound)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, label="T - T_ref")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_flux(path, flux: np.ndarray, h: float = 1.0, highlight: Optional[Sequence[int]] = None,
                title: Optional[str] = None) -> None:
    """Element flux arrows over the flux magnitude; `highlight` elements get an outline box."""
    plt = _pyplot()
    from matplotlib.patches import Rectangle
    ny, nx = flux.shape[:2]
    xc = (np.arange(nx) + 0.5) * h
    yc = (np.arange(ny) + 0.5) * h
    magnitude = np.hypot(flux[..., 0], flux[..., 1])
    stride = max(1, max(nx, ny) // 25)
    fig, ax = plt.subplots(figsize=(7.5, 5.0))
    image = ax.imshow(magnitude, origin="lower", extent=(0, nx * h, 0, ny * h), cmap="magma")
    ax.quiver(xc[::stride], yc[::stride], flux[::stride, ::stride, 0], flux[::stride, ::stride, 1],
              color="white", pivot="mid")
    if highlight is not None and len(highlight):
        idx = np.asarray(highlight, dtype=int)
        ex, ey = idx % nx, idx // nx
        ax.add_patch(Rectangle((ex.min() * h, ey.min() * h), (ex.max() - ex.min() + 1) * h,
                               (ey.max() - ey.min() + 1) * h, fill=False, edgecolor="cyan", linewidth=1.5))
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, label="|q|")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_centerline(path, profiles: Dict[str, np.ndarray], title: Optional[str] = None) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.5, 4.0))
    for name, values in profiles.items():
        if name in ("x", "y"):
            continue
        ax.plot(profiles["x"], values, label=name, linestyle="--" if name == "T_ref" else "-")
    ax.set_xlabel("x")
    ax.set_ylabel("T")
    ax.legend()
    if title:
        ax.set_title(f"{title} (y = {profiles['y'][0]:g})")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_database(path, db, title: Optional[str] = None) -> None:
    """k11 against k22 for every stored cell, coloured by volume fraction."""
    if not len(db):
        raise ReportError("database is empty")
    plt = _pyplot()
    props = db.properties
    vf = np.array([r.vf for r in db.records])
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    points = ax.scatter(props[:, 0], props[:, 1], c=vf, s=6, cmap="viridis")
    ax.set_xlabel("k11")
    ax.set_ylabel("k22")
    ax.set_aspect("equal")
    ax.set_title(title or f"{len(db)} cells, n = {db.n}")
    fig.colorbar(points, ax=ax, label="volume fraction")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
