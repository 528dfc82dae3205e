"""Periodic cell problems and effective conductivity of pixel cells."""
import numpy as np
import pytest

from app.database import RveParams, generate_pixels
from app.homogenization import (PixelCell, SymmetryViolationError, effective_conductivity, homogenize,
                                read_pgm, solve_cell_problems, write_pgm)


def random_cell(rng, n=8, fill=0.6):
    return PixelCell(rng.random((n, n)) < fill)


def test_solid_cell_is_identity():
    cell = PixelCell.solid(50)
    np.testing.assert_allclose(homogenize(cell), np.eye(2), atol=1e-10)
    assert not np.any(solve_cell_problems(cell).fields)


def test_void_cell_is_near_zero():
    tensor = homogenize(PixelCell.void(50))
    assert np.all(np.abs(tensor) <= 1e-8)


def test_circular_hole_matches_matrix_value():
    cell = PixelCell.circular_hole(50)
    assert cell.volume_fraction == pytest.approx(0.5, abs=0.01)
    tensor = homogenize(cell)
    assert tensor[0, 0] == pytest.approx(0.3162, abs=0.02)
    assert tensor[1, 1] == pytest.approx(0.3162, abs=0.02)
    assert abs(tensor[0, 1]) <= 1e-8


def test_horizontal_laminate_voigt_and_reuss():
    cell = generate_pixels(RveParams(0, 13, 0), 50)
    assert cell.volume_fraction == pytest.approx(0.52)
    tensor = homogenize(cell)
    assert tensor[0, 0] == pytest.approx(0.52, abs=1e-6)
    assert tensor[1, 1] <= 1e-6
    assert not np.any(solve_cell_problems(cell).fields[0])


def test_rotation_swaps_components(rng):
    for _ in range(5):
        cell = random_cell(rng)
        unrotated = homogenize(cell, check_orthotropic=False)
        rotated = homogenize(cell.rotated(), check_orthotropic=False)
        assert rotated[0, 0] == pytest.approx(unrotated[1, 1], abs=1e-9)
        assert rotated[1, 1] == pytest.approx(unrotated[0, 0], abs=1e-9)
        assert rotated[0, 1] == pytest.approx(-unrotated[0, 1], abs=1e-9)


def test_rotated_fluctuation_fields(rng):
    i, j = np.meshgrid(np.arange(8), np.arange(8))
    cell = PixelCell(((i + j) % 2 == 0) | (rng.random((8, 8)) < 0.4))
    n = cell.n
    old = solve_cell_problems(cell).fields
    new = solve_cell_problems(cell.rotated()).fields
    for row in range(n):
        for col in range(n):
            assert new[0][row, col] == pytest.approx(old[1][col, (n - row) % n], abs=1e-8)


def test_voigt_bound_and_semidefinite(rng):
    for _ in range(10):
        cell = random_cell(rng, fill=rng.uniform(0.2, 0.9))
        tensor = homogenize(cell, check_orthotropic=False)
        vf = cell.volume_fraction
        assert -1e-12 <= tensor[0, 0] <= vf + 1e-8
        assert -1e-12 <= tensor[1, 1] <= vf + 1e-8
        np.testing.assert_array_equal(tensor, tensor.T)
        assert np.linalg.eigvalsh(tensor).min() >= -1e-12


def test_adding_solid_never_decreases_conductivity(rng):
    cell = random_cell(rng, fill=0.5)
    before = homogenize(cell, check_orthotropic=False)
    voids = np.argwhere(~cell.grid)
    for j, i in voids[rng.choice(len(voids), size=5, replace=False)]:
        grid = cell.grid.copy()
        grid[j, i] = True
        after = homogenize(PixelCell(grid), check_orthotropic=False)
        assert after[0, 0] >= before[0, 0] - 1e-12
        assert after[1, 1] >= before[1, 1] - 1e-12


def test_diagonal_stripes_are_not_orthotropic():
    i, j = np.meshgrid(np.arange(8), np.arange(8))
    stripes = PixelCell(((i - j) % 8) < 4)
    with pytest.raises(SymmetryViolationError) as err:
        homogenize(stripes)
    assert abs(err.value.tensor[0, 1]) > 1e-6


def test_effective_conductivity_of_family_member():
    k = effective_conductivity(generate_pixels(RveParams(3, 5, 2), 20))
    assert 0.0 < k.k22 < k.k11 < 1.0


def test_pgm_keeps_the_grid(tmp_path):
    cell = generate_pixels(RveParams(2, 0, 3), 12)
    path = tmp_path / "cell.pgm"
    write_pgm(path, cell)
    assert path.read_bytes().startswith(b"P5\n12 12\n255\n")
    assert read_pgm(path) == cell


def test_pgm_top_row_is_top_of_cell(tmp_path):
    grid = np.zeros((4, 4), dtype=bool)
    grid[3, :] = True
    path = tmp_path / "top.pgm"
    write_pgm(path, PixelCell(grid))
    pixels = path.read_bytes()[-16:]
    assert pixels[:4] == b"\xff" * 4
    assert pixels[4:] == b"\x00" * 12
