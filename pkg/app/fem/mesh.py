"""
Structured quad mesh and boundary data for the macro (structural) scale.

Nodes are numbered row-major from the bottom-left corner, elements likewise,
and every element lists its 4 nodes counterclockwise starting bottom-left.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

EDGES = ("left", "right", "bottom", "top")


class BoundaryConditionError(Exception):
    pass


@dataclass(frozen=True)
class MacroMesh:
    nx: int
    ny: int
    h: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"mesh needs at least one element per axis, got {self.nx}x{self.ny}")
        if self.h <= 0:
            raise ValueError(f"element size must be positive, got {self.h}")

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    def node(self, i: int, j: int) -> int:
        return j * (self.nx + 1) + i

    def element(self, ex: int, ey: int) -> int:
        return ey * self.nx + ex

    def connectivity(self) -> np.ndarray:
        """(ne, 4) node indices per element, counterclockwise from bottom-left."""
        ex, ey = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        n0 = (ey * (self.nx + 1) + ex).ravel()
        return np.stack([n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1], axis=1)

    def coordinates(self) -> np.ndarray:
        xs, ys = np.meshgrid(np.arange(self.nx + 1) * self.h, np.arange(self.ny + 1) * self.h)
        return np.column_stack([xs.ravel(), ys.ravel()])

    def centroids(self) -> np.ndarray:
        xs, ys = np.meshgrid((np.arange(self.nx) + 0.5) * self.h, (np.arange(self.ny) + 0.5) * self.h)
        return np.column_stack([xs.ravel(), ys.ravel()])

    def element_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """Column (ex) and row (ey) of every element."""
        idx = np.arange(self.n_elements)
        return idx % self.nx, idx // self.nx


def edge_nodes(mesh: MacroMesh, edge: str) -> np.ndarray:
    if edge == "left":
        return np.array([mesh.node(0, j) for j in range(mesh.ny + 1)])
    if edge == "right":
        return np.array([mesh.node(mesh.nx, j) for j in range(mesh.ny + 1)])
    if edge == "bottom":
        return np.array([mesh.node(i, 0) for i in range(mesh.nx + 1)])
    if edge == "top":
        return np.array([mesh.node(i, mesh.ny) for i in range(mesh.nx + 1)])
    raise ValueError(f"unknown edge '{edge}', expected one of {', '.join(EDGES)}")


def segment_nodes(mesh: MacroMesh, edge: str, span: Sequence[float]) -> np.ndarray:
    """Nodes of `edge` whose coordinate along the edge lies in [span[0], span[1]]."""
    lo, hi = float(span[0]), float(span[1])
    if hi < lo:
        lo, hi = hi, lo
    nodes = edge_nodes(mesh, edge)
    coords = mesh.coordinates()[nodes]
    along = coords[:, 1] if edge in ("left", "right") else coords[:, 0]
    tol = 1e-9 * mesh.h
    picked = nodes[(along >= lo - tol) & (along <= hi + tol)]
    if picked.size == 0:
        raise BoundaryConditionError(f"segment {span} on the {edge} edge contains no nodes")
    return picked


@dataclass
class BoundaryConditions:
    """Prescribed temperatures as (node set, value) pairs.

    The first pair is the hot set and the last the cold set when built with
    `hot_cold`; flux diagnostics rely on that convention.
    """
    prescribed: List[Tuple[np.ndarray, float]] = field(default_factory=list)

    @classmethod
    def hot_cold(cls, hot_nodes, t_hot: float, cold_nodes, t_cold: float) -> "BoundaryConditions":
        return cls([(np.asarray(hot_nodes, dtype=int), float(t_hot)),
                    (np.asarray(cold_nodes, dtype=int), float(t_cold))])

    @property
    def hot_nodes(self) -> np.ndarray:
        return self.prescribed[0][0]

    @property
    def cold_nodes(self) -> np.ndarray:
        return self.prescribed[-1][0]

    @property
    def t_hot(self) -> float:
        return self.prescribed[0][1]

    @property
    def t_cold(self) -> float:
        return self.prescribed[-1][1]

    def validate(self, mesh: MacroMesh) -> None:
        if not self.prescribed:
            raise BoundaryConditionError("at least one Dirichlet node set is required")
        seen: set = set()
        for nodes, _ in self.prescribed:
            nodes = np.asarray(nodes, dtype=int)
            if nodes.size == 0:
                raise BoundaryConditionError("empty Dirichlet node set")
            if nodes.min() < 0 or nodes.max() >= mesh.n_nodes:
                raise BoundaryConditionError(
                    f"Dirichlet node out of range [0, {mesh.n_nodes}): {nodes.min()}..{nodes.max()}")
            overlap = seen.intersection(nodes.tolist())
            if overlap:
                raise BoundaryConditionError(f"Dirichlet node sets overlap at nodes {sorted(overlap)[:5]}")
            seen.update(nodes.tolist())

    def fixed(self) -> Tuple[np.ndarray, np.ndarray]:
        """Sorted constrained node indices and their values."""
        nodes = np.concatenate([np.asarray(n, dtype=int) for n, _ in self.prescribed])
        values = np.concatenate([np.full(len(n), v, dtype=float) for n, v in self.prescribed])
        order = np.argsort(nodes, kind="stable")
        return nodes[order], values[order]

    def value_range(self) -> Tuple[float, float]:
        values = [v for _, v in self.prescribed]
        return min(values), max(values)


def full_edge_bc(mesh: MacroMesh, t_hot: float = 100.0, t_cold: float = 0.0,
                 hot_span: Optional[Sequence[float]] = None) -> BoundaryConditions:
    """Hot set on the left edge (whole edge or a span of it), cold set on the whole right edge."""
    hot = edge_nodes(mesh, "left") if hot_span is None else segment_nodes(mesh, "left", hot_span)
    return BoundaryConditions.hot_cold(hot, t_hot, edge_nodes(mesh, "right"), t_cold)
