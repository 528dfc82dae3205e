"""
Named selections over mesh nodes and elements.

Distances are measured from element centroids (element sets) or node
coordinates (node sets) to a region center, in the mesh length unit.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..fem.mesh import BoundaryConditions, MacroMesh


@dataclass(frozen=True)
class RegionMask:
    name: str
    kind: str
    indices: np.ndarray

    def __post_init__(self):
        if self.kind not in ("nodes", "elements"):
            raise ValueError(f"region kind must be 'nodes' or 'elements', got {self.kind!r}")
        object.__setattr__(self, "indices", np.unique(np.asarray(self.indices, dtype=int)))

    def __len__(self):
        return int(self.indices.size)

    def mask(self, size: int) -> np.ndarray:
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= size):
            raise ValueError(f"region '{self.name}' references indices outside [0, {size})")
        out = np.zeros(size, dtype=bool)
        out[self.indices] = True
        return out

    def validate(self, mesh: MacroMesh) -> None:
        self.mask(mesh.n_nodes if self.kind == "nodes" else mesh.n_elements)


def _distances(points: np.ndarray, center: Sequence[float]) -> np.ndarray:
    return np.hypot(points[:, 0] - center[0], points[:, 1] - center[1])


def ring_elements(mesh: MacroMesh, center, r_in: float, r_out: float, name: str = "ring") -> RegionMask:
    d = _distances(mesh.centroids(), center)
    return RegionMask(name, "elements", np.flatnonzero((d >= r_in) & (d < r_out)))


def disk_elements(mesh: MacroMesh, center, radius: float, name: str = "disk") -> RegionMask:
    d = _distances(mesh.centroids(), center)
    return RegionMask(name, "elements", np.flatnonzero(d < radius))


def _nearest_slots(centers: np.ndarray, target: float, count: int) -> np.ndarray:
    order = np.lexsort((centers, np.abs(centers - target)))
    return np.sort(order[:count])


def rectangle_elements(mesh: MacroMesh, center, length: int, width: int, name: str = "target") -> RegionMask:
    """`length` columns by `width` rows of elements, those whose centroids sit nearest the center."""
    if length < 1 or width < 1 or length > mesh.nx or width > mesh.ny:
        raise ValueError(f"rectangle {length}x{width} does not fit a {mesh.nx}x{mesh.ny} mesh")
    cols = _nearest_slots((np.arange(mesh.nx) + 0.5) * mesh.h, center[0], length)
    rows = _nearest_slots((np.arange(mesh.ny) + 0.5) * mesh.h, center[1], width)
    ex, ey = np.meshgrid(cols, rows)
    return RegionMask(name, "elements", (ey * mesh.nx + ex).ravel())


def exterior_nodes(mesh: MacroMesh, center, r_out: float, name: str = "exterior") -> RegionMask:
    d = _distances(mesh.coordinates(), center)
    return RegionMask(name, "nodes", np.flatnonzero(d > r_out))


def outside_nodes(mesh: MacroMesh, center, r_in: float, name: str = "exterior+shield") -> RegionMask:
    d = _distances(mesh.coordinates(), center)
    return RegionMask(name, "nodes", np.flatnonzero(d >= r_in))


def cloak_query(region: RegionMask, t_ref: np.ndarray, bc: BoundaryConditions, rel_floor: float = 1e-3) -> RegionMask:
    """Drop Dirichlet nodes and nodes whose reference temperature is too close to zero."""
    fixed, _ = bc.fixed()
    lo, hi = bc.value_range()
    floor = rel_floor * abs(hi - lo)
    keep = region.indices[~np.isin(region.indices, fixed)]
    keep = keep[np.abs(t_ref[keep]) >= floor]
    return RegionMask(region.name, "nodes", keep)


@dataclass(frozen=True)
class ProbePoints:
    a: int
    b: int
    c: int
    d: int

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])

    def validate(self, mesh: MacroMesh) -> None:
        coords = mesh.coordinates()[self.as_array()]
        if not np.all(np.diff(coords[:, 0]) > 0):
            raise ValueError(f"probe points must satisfy x_A < x_B < x_C < x_D, got x = {coords[:, 0].tolist()}")
        if not np.all(coords[:, 1] == coords[0, 1]):
            raise ValueError("probe points must share one horizontal line")


def _snap(value: float, h: float, upper: int) -> int:
    """Nearest grid index, ties toward the lower index."""
    idx = int(np.ceil(value / h - 0.5))
    return min(max(idx, 0), upper)


def probe_points(mesh: MacroMesh, center, r_in: float, r_out: float) -> ProbePoints:
    """A, D on the outer circle and B, C on the inner circle along the horizontal center line."""
    xs = (center[0] - r_out, center[0] - r_in, center[0] + r_in, center[0] + r_out)
    return probe_points_at(mesh, xs, center[1])


def probe_points_at(mesh: MacroMesh, xs: Sequence[float], y: float) -> ProbePoints:
    if len(xs) != 4:
        raise ValueError(f"expected 4 probe x-coordinates, got {len(xs)}")
    j = _snap(y, mesh.h, mesh.ny)
    a, b, c, d = (mesh.node(_snap(x, mesh.h, mesh.nx), j) for x in xs)
    probes = ProbePoints(a, b, c, d)
    probes.validate(mesh)
    return probes
