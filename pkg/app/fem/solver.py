"""
Bilinear-quad finite elements for 2D steady-state heat conduction.

Element matrices use 2x2 Gauss quadrature; the global system is reduced to the
free degrees of freedom (Dirichlet values are eliminated, never penalized) and
factorized once so that adjoint solves can reuse the factorization.
"""
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Dict, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.linalg import factorized

from .mesh import BoundaryConditions, MacroMesh

logger = logging.getLogger(__name__)

KAPPA_FLOOR = 1e-9
SOLVER_RTOL = 1e-10

_GAUSS = 1.0 / np.sqrt(3.0)
GAUSS_POINTS = [(-_GAUSS, -_GAUSS), (_GAUSS, -_GAUSS), (_GAUSS, _GAUSS), (-_GAUSS, _GAUSS)]


class SolverError(Exception):
    def __init__(self, message: str, diagnostics: Dict = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class OrthotropicConductivity:
    k11: float
    k22: float

    def __post_init__(self):
        if not (np.isfinite(self.k11) and np.isfinite(self.k22)):
            raise ValueError(f"conductivity must be finite, got ({self.k11}, {self.k22})")
        if self.k11 < 0 or self.k22 < 0:
            raise ValueError(f"conductivity components must be non-negative, got ({self.k11}, {self.k22})")

    @classmethod
    def isotropic(cls, k: float) -> "OrthotropicConductivity":
        return cls(k, k)

    def as_array(self) -> np.ndarray:
        return np.array([self.k11, self.k22], dtype=float)


def shape_gradients(xi: float, eta: float, h: float) -> np.ndarray:
    """(2, 4) matrix B of shape-function derivatives in physical coordinates."""
    dxi = 0.25 * np.array([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)])
    deta = 0.25 * np.array([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)])
    return np.vstack([dxi, deta]) * (2.0 / h)


def centroid_gradients(h: float) -> np.ndarray:
    return shape_gradients(0.0, 0.0, h)


@lru_cache(maxsize=32)
def unit_component_matrices(h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Element matrices for k = (1, 0) and k = (0, 1).

    The element matrix is linear in the two components, so every element
    matrix is k11 * K11 + k22 * K22.
    """
    det_j = h * h / 4.0
    k11 = np.zeros((4, 4))
    k22 = np.zeros((4, 4))
    for xi, eta in GAUSS_POINTS:
        b = shape_gradients(xi, eta, h)
        k11 += np.outer(b[0], b[0]) * det_j
        k22 += np.outer(b[1], b[1]) * det_j
    k11 = 0.5 * (k11 + k11.T)
    k22 = 0.5 * (k22 + k22.T)
    k11.setflags(write=False)
    k22.setflags(write=False)
    return k11, k22


def element_stiffness(kappa: OrthotropicConductivity, h: float = 1.0) -> np.ndarray:
    if h <= 0:
        raise ValueError(f"element size must be positive, got {h}")
    if kappa.k11 < 0 or kappa.k22 < 0:
        raise ValueError(f"conductivity components must be non-negative, got ({kappa.k11}, {kappa.k22})")
    k11, k22 = unit_component_matrices(float(h))
    return kappa.k11 * k11 + kappa.k22 * k22


def prepare_field(mesh: MacroMesh, field) -> np.ndarray:
    """Validate a per-element (ne, 2) conductivity field and apply the floor."""
    field = np.asarray(field, dtype=float)
    if field.shape != (mesh.n_elements, 2):
        raise ValueError(f"conductivity field must have shape ({mesh.n_elements}, 2), got {field.shape}")
    if not np.all(np.isfinite(field)):
        raise ValueError("conductivity field contains non-finite values")
    if np.any(field < 0):
        raise ValueError("conductivity field contains negative components")
    return np.maximum(field, KAPPA_FLOOR)


def global_stiffness(mesh: MacroMesh, field) -> csr_matrix:
    field = prepare_field(mesh, field)
    k11, k22 = unit_component_matrices(float(mesh.h))
    conn = mesh.connectivity()
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    vals = (field[:, :1] * k11.ravel()[None, :] + field[:, 1:] * k22.ravel()[None, :]).ravel()
    k = coo_matrix((vals, (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)).tocsr()
    return ((k + k.T) * 0.5).tocsr()


@dataclass
class ThermalState:
    """Forward solution plus everything an adjoint solve needs."""
    mesh: MacroMesh
    kappa: np.ndarray
    bc: BoundaryConditions
    T: np.ndarray
    K: csr_matrix
    free: np.ndarray
    fixed: np.ndarray
    _solve_free: Callable = None

    @cached_property
    def flux(self) -> np.ndarray:
        return heat_flux(self.mesh, self.kappa, self.T)

    @cached_property
    def element_temperatures(self) -> np.ndarray:
        return self.T[self.mesh.connectivity()]

    def adjoint(self, rhs: np.ndarray) -> np.ndarray:
        """Solve K_ff lam_f = rhs_f; the multiplier is zero on Dirichlet nodes."""
        lam = np.zeros(self.mesh.n_nodes)
        if self.free.size == 0:
            return lam
        rhs_free = np.asarray(rhs, dtype=float)[self.free]
        if not np.any(rhs_free):
            return lam
        lam_free = self._solve_free(rhs_free)
        if not np.all(np.isfinite(lam_free)):
            raise SolverError("adjoint solve produced non-finite values", {"free_dofs": int(self.free.size)})
        lam[self.free] = lam_free
        return lam

    def sensitivity(self, lam: np.ndarray) -> np.ndarray:
        """Per-element (-lam^T dK/dk11 T, -lam^T dK/dk22 T)."""
        k11, k22 = unit_component_matrices(float(self.mesh.h))
        lam_e = lam[self.mesh.connectivity()]
        t_e = self.element_temperatures
        g11 = -np.einsum("ei,ij,ej->e", lam_e, k11, t_e)
        g22 = -np.einsum("ei,ij,ej->e", lam_e, k22, t_e)
        return np.column_stack([g11, g22])


def assemble_and_solve(mesh: MacroMesh, field, bc: BoundaryConditions) -> ThermalState:
    bc.validate(mesh)
    kappa = prepare_field(mesh, field)
    k = global_stiffness(mesh, kappa)
    fixed, values = bc.fixed()
    free = np.setdiff1d(np.arange(mesh.n_nodes), fixed)

    T = np.zeros(mesh.n_nodes)
    T[fixed] = values
    solve_free = None
    if free.size:
        k_free = k[free]
        k_ff = k_free[:, free].tocsc()
        rhs = -(k_free[:, fixed] @ values)
        try:
            solve_free = factorized(k_ff)
        except RuntimeError as e:
            logger.error("Factorization failed on %d free DOFs: %s", free.size, e)
            raise SolverError(f"reduced conduction matrix is singular: {e}", {"free_dofs": int(free.size)})
        t_free = solve_free(rhs)
        diagnostics = {
            "free_dofs": int(free.size),
            "rhs_norm": float(np.linalg.norm(rhs)),
            "finite": bool(np.all(np.isfinite(t_free))),
        }
        if not diagnostics["finite"]:
            logger.error("Forward solve produced non-finite temperatures: %s", diagnostics)
            raise SolverError("forward solve produced non-finite temperatures", diagnostics)
        residual = float(np.linalg.norm(k_ff @ t_free - rhs))
        diagnostics["residual"] = residual
        if residual > SOLVER_RTOL * max(diagnostics["rhs_norm"], 1e-300) and residual > 1e-12:
            logger.error("Forward solve residual too large: %s", diagnostics)
            raise SolverError(f"forward solve residual {residual:.3e} exceeds tolerance", diagnostics)
        T[free] = t_free

    return ThermalState(mesh=mesh, kappa=kappa, bc=bc, T=T, K=k, free=free, fixed=fixed,
                        _solve_free=solve_free)


def heat_flux(mesh: MacroMesh, field, T: np.ndarray) -> np.ndarray:
    """Per-element flux -kappa * grad(T) at the element centroid, shape (ne, 2)."""
    T = np.asarray(T, dtype=float)
    if T.shape != (mesh.n_nodes,):
        raise ValueError(f"temperature field must have shape ({mesh.n_nodes},), got {T.shape}")
    kappa = prepare_field(mesh, field)
    grads = T[mesh.connectivity()] @ centroid_gradients(mesh.h).T
    return -kappa * grads


def boundary_flux_balance(mesh: MacroMesh, field, T: np.ndarray, bc: BoundaryConditions) -> Tuple[float, float]:
    """Heat entering through the hot set and leaving through the cold set, from Dirichlet reactions."""
    reactions = global_stiffness(mesh, field) @ np.asarray(T, dtype=float)
    inflow = float(reactions[bc.hot_nodes].sum())
    outflow = float(-reactions[bc.cold_nodes].sum())
    return inflow, outflow
