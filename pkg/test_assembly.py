"""Database substitution, substitution metrics and the assembled raster."""
from dataclasses import replace

import numpy as np
import pytest

from conftest import small_config
from app.assembly import (AssemblyError, rasterize, substitute, substitution_metrics, verify_assembled,
                          write_raster_pgm, write_raster_png, write_scatter_csv)
from app.database import RveDatabase
from app.fem import MacroMesh, MacroModel, full_edge_bc
from app.homogenization import PixelCell
from app.objectives import build_objective
from app.optimizer import objective_spec


def all_design_model(nx=3, ny=2, value=1.0):
    mesh = MacroMesh(nx, ny)
    return MacroModel(mesh, full_edge_bc(mesh), np.full((mesh.n_elements, 2), value),
                      np.ones(mesh.n_elements, dtype=bool))


def without(db, dropped):
    dropped = set(int(i) for i in dropped)
    keep = [r for r in db.records if r.index not in dropped]
    records = [replace(r, index=i) for i, r in enumerate(keep)]
    return RveDatabase(db.n, records, db.geometry[[r.index for r in keep]])


# =============================================================================
# Substitution
# =============================================================================

def test_self_substitution_is_exact(small_db, rng):
    picked = rng.choice(len(small_db), size=30)
    result = substitute(small_db.properties[picked], small_db)
    assert result.mse == 0.0
    assert result.r2 == 1.0
    np.testing.assert_array_equal(result.l1, 0.0)
    np.testing.assert_array_equal(small_db.properties[result.indices], small_db.properties[picked])


def test_substitution_matches_a_linear_scan(small_db, rng):
    targets = rng.random((100, 2))
    result = substitute(targets, small_db)
    expected = [small_db.nearest_bruteforce(k11, k22).index for k11, k22 in targets]
    assert result.indices.tolist() == expected
    assert result.mse >= 0.0 and result.r2 <= 1.0
    np.testing.assert_array_equal(result.elements, np.arange(100))


def test_removing_matched_records_never_brings_targets_closer(small_db, rng):
    targets = rng.uniform(0.05, 0.95, size=(40, 2))
    first = substitute(targets, small_db)
    pruned = without(small_db, np.unique(first.indices))
    second = substitute(targets, pruned)
    assert np.all(second.l1 >= first.l1)
    assert second.l1.sum() > first.l1.sum()

    residual = np.sum((targets - second.substituted) ** 2) / len(targets)
    assert second.mse == pytest.approx(residual, rel=1e-12)


def test_metrics_without_spread():
    ones = np.ones((4, 2))
    assert substitution_metrics(ones, ones) == (0.0, 1.0)
    mse, r2 = substitution_metrics(ones, np.zeros((4, 2)))
    assert mse == 2.0
    assert r2 == 0.0


def test_metrics_stack_both_components():
    opt = np.array([[0.0, 1.0], [1.0, 0.0]])
    sub = np.array([[0.0, 0.5], [1.0, 0.0]])
    mse, r2 = substitution_metrics(opt, sub)
    assert mse == pytest.approx(0.125)
    assert r2 == pytest.approx(1.0 - 0.25 / 1.0)


def test_empty_inputs_rejected(small_db):
    with pytest.raises(AssemblyError):
        substitute(np.zeros((0, 2)), small_db)
    empty = RveDatabase(8, [], np.zeros((0, 8), dtype=np.uint8))
    with pytest.raises(AssemblyError):
        substitute(np.full((3, 2), 0.5), empty)


# =============================================================================
# Raster
# =============================================================================

def test_all_solid_design_gives_a_white_raster(small_db):
    model = all_design_model()
    result = substitute(np.ones((model.n_design, 2)), small_db, model.design_elements)
    image = rasterize(model, result, small_db)
    assert image.shape == (2 * 8, 3 * 8)
    assert image.all()


def test_cells_are_placed_from_the_bottom_left(small_db):
    model = all_design_model(2, 2)
    solid = small_db.nearest(1.0, 1.0).index
    void = small_db.nearest(0.0, 0.0).index
    design = small_db.properties[[solid, void, void, void]]
    image = rasterize(model, substitute(design, small_db, model.design_elements), small_db)
    assert image[:8, :8].all()
    assert not image[:8, 8:].any()
    assert not image[8:, :].any()


def test_matrix_elements_take_the_background_cell(small_db, small_model_of):
    model = small_model_of("cloak-uniform")
    design = small_db.properties[np.zeros(model.n_design, dtype=int)]
    result = substitute(design, small_db, model.design_elements)
    image = rasterize(model, result, small_db)
    assert image.shape == (model.mesh.ny * 8, model.mesh.nx * 8)
    np.testing.assert_array_equal(image[:8, :8], PixelCell.circular_hole(8).grid)

    first = int(model.design_elements[0])
    ex, ey = first % model.mesh.nx, first // model.mesh.nx
    np.testing.assert_array_equal(image[ey * 8:(ey + 1) * 8, ex * 8:(ex + 1) * 8], small_db.cell(0).grid)


def test_background_must_match_the_cell_size(small_db):
    model = all_design_model()
    result = substitute(np.ones((model.n_design, 2)), small_db, model.design_elements)
    with pytest.raises(AssemblyError):
        rasterize(model, result, small_db, background=PixelCell.solid(10))


# =============================================================================
# Verification and files
# =============================================================================

def test_exact_substitution_keeps_the_objective(small_db, small_model_of, rng):
    model = small_model_of("cloak-uniform")
    objective = build_objective(objective_spec(small_config("cloak-uniform")), model)
    design = small_db.properties[rng.choice(len(small_db), size=model.n_design)]
    result = substitute(design, small_db, model.design_elements)
    assert result.mse == 0.0
    assert verify_assembled(model, result, objective) == pytest.approx(
        objective.value(model.solve(design)), rel=1e-12)


def test_output_files(tmp_path, small_db):
    model = all_design_model()
    result = substitute(np.full((model.n_design, 2), 0.4), small_db, model.design_elements)
    image = rasterize(model, result, small_db)

    write_scatter_csv(tmp_path / "scatter.csv", result, "config abc")
    rows = (tmp_path / "scatter.csv").read_text().splitlines()
    assert rows[:2] == ["# config abc", "element,opt_k11,opt_k22,sub_k11,sub_k22,l1"]
    assert len(rows) == 2 + model.n_design
    assert rows[2].startswith("0,0.4,0.4,")

    write_raster_pgm(tmp_path / "assembled.pgm", image)
    data = (tmp_path / "assembled.pgm").read_bytes()
    assert data.startswith(b"P5\n24 16\n255\n")
    assert len(data) == len(b"P5\n24 16\n255\n") + 24 * 16

    write_raster_png(tmp_path / "assembled.png", image)
    assert (tmp_path / "assembled.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
