"""
Numerical homogenization of pixelated two-phase unit cells.

Each pixel is one bilinear square element; solid pixels conduct with k = 1 and
void pixels keep the floor conductivity so every cell shares the same stencil.
The two cell problems (unit average gradient along x, then along y) are solved
with periodic node coupling and one pinned node, and the effective tensor is
the volume average of k (e_i + grad chi_i) . (e_j + grad chi_j).
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import factorized

from ..fem.solver import GAUSS_POINTS, KAPPA_FLOOR, OrthotropicConductivity, shape_gradients, unit_component_matrices

logger = logging.getLogger(__name__)

SOLID_KAPPA = 1.0
ORTHOTROPY_TOL = 1e-6


class SymmetryViolationError(Exception):
    def __init__(self, message: str, tensor=None, params=None):
        super().__init__(message)
        self.tensor = tensor
        self.params = params


class PixelCell:
    """Square n x n occupancy grid; grid[j, i] is row j (from the bottom), column i."""

    def __init__(self, grid):
        grid = np.asarray(grid)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1] or grid.shape[0] < 1:
            raise ValueError(f"pixel grid must be square and non-empty, got shape {grid.shape}")
        self.grid = grid.astype(bool)
        self.grid.setflags(write=False)

    @property
    def n(self) -> int:
        return self.grid.shape[0]

    @property
    def volume_fraction(self) -> float:
        return float(self.grid.sum()) / self.grid.size

    @classmethod
    def solid(cls, n: int = 50) -> "PixelCell":
        return cls(np.ones((n, n), dtype=bool))

    @classmethod
    def void(cls, n: int = 50) -> "PixelCell":
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def circular_hole(cls, n: int = 50, area_fraction: float = 0.5) -> "PixelCell":
        """Void where the pixel center lies within r = n * sqrt(area_fraction / pi) of the cell center."""
        r = n * np.sqrt(area_fraction / np.pi)
        centers = np.arange(n) + 0.5
        x, y = np.meshgrid(centers, centers)
        return cls(np.hypot(x - n / 2.0, y - n / 2.0) >= r)

    @classmethod
    def from_packed(cls, packed: bytes, n: int) -> "PixelCell":
        bits = np.unpackbits(np.frombuffer(packed, dtype=np.uint8), count=n * n)
        return cls(bits.reshape(n, n))

    def packed(self) -> bytes:
        return np.packbits(self.grid.ravel()).tobytes()

    def rotated(self) -> "PixelCell":
        return PixelCell(np.rot90(self.grid))

    def edge_contact(self) -> dict:
        return {
            "left": bool(self.grid[:, 0].any()),
            "right": bool(self.grid[:, -1].any()),
            "bottom": bool(self.grid[0, :].any()),
            "top": bool(self.grid[-1, :].any()),
        }

    def conductivities(self) -> np.ndarray:
        return np.where(self.grid.ravel(), SOLID_KAPPA, KAPPA_FLOOR)

    def __eq__(self, other):
        return isinstance(other, PixelCell) and np.array_equal(self.grid, other.grid)

    def __hash__(self):
        return hash(self.packed())

    def __repr__(self):
        return f"PixelCell(n={self.n}, vf={self.volume_fraction:.4f})"


@dataclass
class CellSolution:
    """Periodic fluctuation fields, shape (2, n, n): [loading, row, column] of the unique nodes."""
    n: int
    fields: np.ndarray

    def loading(self, k: int) -> np.ndarray:
        return self.fields[k]


@dataclass(frozen=True)
class _PeriodicStencil:
    n: int
    conn: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    k_iso: np.ndarray
    b_centroid: np.ndarray
    b_gauss: np.ndarray


@lru_cache(maxsize=8)
def periodic_stencil(n: int) -> _PeriodicStencil:
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    ex, ey = ex.ravel(), ey.ravel()

    def p(i, j):
        return (j % n) * n + (i % n)

    conn = np.stack([p(ex, ey), p(ex + 1, ey), p(ex + 1, ey + 1), p(ex, ey + 1)], axis=1)
    k11, k22 = unit_component_matrices(1.0)
    b_gauss = np.stack([shape_gradients(xi, eta, 1.0) for xi, eta in GAUSS_POINTS])
    return _PeriodicStencil(
        n=n,
        conn=conn,
        rows=np.repeat(conn, 4, axis=1).ravel(),
        cols=np.tile(conn, (1, 4)).ravel(),
        k_iso=k11 + k22,
        b_centroid=shape_gradients(0.0, 0.0, 1.0),
        b_gauss=b_gauss,
    )


def solve_cell_problems(cell: PixelCell) -> CellSolution:
    n = cell.n
    st = periodic_stencil(n)
    c = cell.conductivities()
    n_dof = n * n

    vals = (c[:, None] * st.k_iso.ravel()[None, :]).ravel()
    k = coo_matrix((vals, (st.rows, st.cols)), shape=(n_dof, n_dof)).tocsc()

    # unit load -c * A * B^T e_k per element, A = 1
    loads = np.zeros((2, n_dof))
    for kdir in range(2):
        fe = -c[:, None] * st.b_centroid[kdir][None, :]
        np.add.at(loads[kdir], st.conn.ravel(), fe.ravel())

    fields = np.zeros((2, n_dof))
    if n_dof > 1:
        k_ff = k[1:, 1:]
        solve = factorized(k_ff.tocsc())
        for kdir in range(2):
            rhs = loads[kdir, 1:]
            if np.any(rhs):
                fields[kdir, 1:] = solve(rhs)
    return CellSolution(n=n, fields=fields.reshape(2, n, n))


def homogenize(cell: PixelCell, check_orthotropic: bool = True, solution: CellSolution = None) -> np.ndarray:
    """Effective 2x2 conductivity tensor of a cell (solid k = 1)."""
    st = periodic_stencil(cell.n)
    if solution is None:
        solution = solve_cell_problems(cell)
    c = cell.conductivities()
    chi = solution.fields.reshape(2, -1)[:, st.conn]  # (2, ne, 4)
    eye = np.eye(2)
    q = np.zeros((2, 2))
    for b in st.b_gauss:
        grads = [eye[kdir][None, :] + chi[kdir] @ b.T for kdir in range(2)]
        for i in range(2):
            for j in range(i, 2):
                q[i, j] += 0.25 * np.dot(c, np.einsum("ed,ed->e", grads[i], grads[j]))
    q[1, 0] = q[0, 1]
    tensor = q / cell.grid.size
    if check_orthotropic and abs(tensor[0, 1]) > ORTHOTROPY_TOL:
        raise SymmetryViolationError(
            f"off-diagonal conductivity {tensor[0, 1]:.3e} exceeds {ORTHOTROPY_TOL:g}; cell is not orthotropic",
            tensor=tensor)
    return tensor


def effective_conductivity(cell: PixelCell) -> OrthotropicConductivity:
    tensor = homogenize(cell, check_orthotropic=True)
    return OrthotropicConductivity(max(tensor[0, 0], 0.0), max(tensor[1, 1], 0.0))


def write_pgm(path, cell: PixelCell) -> None:
    """Binary P5 graymap; solid pixels are white, the top image row is the top of the cell."""
    image = np.flipud(cell.grid).astype(np.uint8) * 255
    with open(path, "wb") as f:
        f.write(f"P5\n{cell.n} {cell.n}\n255\n".encode("ascii"))
        f.write(image.tobytes())


def _pgm_tokens(data: bytes, count: int) -> Tuple[list, int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:pos].decode("ascii"))
    return tokens, pos + 1


def read_image_pgm(path) -> np.ndarray:
    """Grayscale P5/P2 image as an array with the file's row order (top row first)."""
    with open(path, "rb") as f:
        data = f.read()
    (magic, width, height, maxval), pos = _pgm_tokens(data, 4)
    width, height, maxval = int(width), int(height), int(maxval)
    if magic == "P5":
        dtype = np.uint8 if maxval < 256 else ">u2"
        pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    elif magic == "P2":
        pixels = np.array(data[pos:].split()[: width * height], dtype=int)
    else:
        raise ValueError(f"not a PGM file (magic {magic!r})")
    if pixels.size != width * height:
        raise ValueError(f"PGM expects {width * height} pixels, found {pixels.size}")
    return pixels.reshape(height, width), maxval


def read_pgm(path) -> PixelCell:
    image, maxval = read_image_pgm(path)
    if image.shape[0] != image.shape[1]:
        raise ValueError(f"cell image must be square, got {image.shape[1]}x{image.shape[0]}")
    return PixelCell(np.flipud(image) > maxval // 2)
