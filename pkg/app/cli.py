"""
Command-line frontend, registered on the Flask CLI.

    flask --app run db build --n 50 --out database
    flask --app run optimize --scenario cloak-uniform
    python -m app check-grad --scenario rot-uniform

Every run is described by one JSON run configuration: scenario preset, then
--config file, then --set overrides (dotted.key=value, value parsed as JSON).
THERMO_OUTPUT_DIR replaces the output directory last.
"""
import json
import logging
import os

import click
import numpy as np
from flask import current_app
from flask.cli import AppGroup, with_appcontext

from .assembly import (AssemblyError, rasterize, substitute, verify_assembled, write_raster_pgm,
                       write_raster_png, write_scatter_csv)
from .database import DatabaseError, build_database, load, save
from .fem import BoundaryConditionError, MacroMesh, SolverError, boundary_flux_balance
from .fem.export import write_centerline_csv, write_flux_csv, write_nodal_csv, write_vtk_temperature
from .homogenization import SymmetryViolationError
from .objectives import ObjectiveError, build_objective, check_gradient, write_gradient_csv
from .objectives.gradcheck import FD_STEP, FD_TOL
from .objectives.regions import rectangle_elements
from .optimizer import (OptimizationError, build_model, build_problem, objective_spec, optimize,
                        read_design_csv, read_history_csv, write_design_csv, write_history_csv)
from .reporting import (ReportError, build_summary, read_centerline_csv, read_flux_csv, read_nodal_csv,
                        read_summary, render_centerline, render_database, render_design, render_difference,
                        render_flux, render_temperature, write_summary)
from .run_config import (DEFAULT_RUN_CONFIG, ConfigError, config_hash, rescaled, resolve_run_config,
                         save_run_config, scenario_names)

logger = logging.getLogger(__name__)

RUN_CONFIG_FILE = "config.json"
CHECKPOINT_DIR = "checkpoints"

# Errors that end a command with exit status 1 and their message.
USER_ERRORS = (ConfigError, DatabaseError, BoundaryConditionError, SolverError, ObjectiveError,
               AssemblyError, SymmetryViolationError, ReportError, ValueError, OSError)


def parse_overrides(assignments):
    """['optimizer.max_iter=10', ...] -> nested override dict."""
    overrides = {}
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected dotted.key=value, got {item!r}", param_hint="--set")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = overrides
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return overrides


def run_options(f):
    f = click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE",
                     help="Override one run-config value (dotted key, JSON value).")(f)
    f = click.option("--out", "out_dir", type=click.Path(file_okay=False),
                     help="Output directory (THERMO_OUTPUT_DIR takes precedence).")(f)
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON run configuration.")(f)
    f = click.option("--scenario", type=click.Choice(scenario_names()), help="Named case-study preset.")(f)
    return f


def load_config(config_path, scenario, assignments, out_dir=None):
    overrides = parse_overrides(assignments)
    if out_dir:
        overrides.setdefault("output", {})["directory"] = out_dir
    try:
        return resolve_run_config(config_path, scenario, overrides, current_app.config.get("OUTPUT_DIR"))
    except ConfigError as e:
        raise click.ClickException(f"invalid run configuration: {e}")


def run_directory(config) -> str:
    path = os.path.join(config["output"]["directory"], config.get("scenario") or "custom")
    os.makedirs(path, exist_ok=True)
    return path


def write_state_outputs(directory, model, state, header, initial_T=None) -> None:
    """Temperature, flux and nodal exports plus the T - T_ref difference and the centerline profile."""
    t_ref = model.reference_model().solve().T
    mesh = model.mesh
    write_vtk_temperature(os.path.join(directory, "temperature.vtk"), mesh, state.T, header)
    write_vtk_temperature(os.path.join(directory, "delta_t.vtk"), mesh, state.T - t_ref, header,
                          scalars="temperature_difference")
    write_flux_csv(os.path.join(directory, "flux.csv"), mesh, state.flux, header)
    write_nodal_csv(os.path.join(directory, "nodes.csv"), mesh, state.T, header, t_ref=t_ref)
    profiles = {"T_ref": t_ref}
    if initial_T is not None:
        profiles["T_initial"] = initial_T
    profiles["T"] = state.T
    write_centerline_csv(os.path.join(directory, "centerline.csv"), mesh,
                         centerline_height(model), profiles, header)


def centerline_height(model) -> float:
    center = model.regions.get("center")
    return float(center[1]) if center else 0.5 * model.mesh.ny * model.mesh.h


# -- database -------------------------------------------------------------------

db_cli = AppGroup("db", help="Build and query the unit-cell property database.")


@db_cli.command("build")
@click.option("--n", "n", type=int, default=50, show_default=True, help="Pixels per cell side.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default=DEFAULT_RUN_CONFIG["database"]["path"], show_default=True)
@click.option("--workers", type=int, default=None, help="Process pool size (default THERMO_WORKERS).")
def db_build(n, out_dir, workers):
    """Enumerate, deduplicate, homogenize and save the cell family."""
    workers = workers or current_app.config.get("WORKERS") or 1
    try:
        db = build_database(n, workers=workers)
        save(db, out_dir)
    except USER_ERRORS as e:
        raise click.ClickException(str(e))
    click.echo(f"{db.generated} generated, {len(db)} unique")
    for name, (lo, hi) in db.ranges().items():
        click.echo(f"{name}: [{lo:.6g}, {hi:.6g}]")
    click.echo(f"saved to {out_dir}")


@db_cli.command("query")
@click.option("--k11", type=float, required=True)
@click.option("--k22", type=float, required=True)
@click.option("--db", "db_dir", type=click.Path(file_okay=False),
              default=DEFAULT_RUN_CONFIG["database"]["path"], show_default=True)
def db_query(k11, k22, db_dir):
    """Nearest database cell to (k11, k22) in L1 distance."""
    try:
        record = load(db_dir).nearest(k11, k22)
    except USER_ERRORS as e:
        raise click.ClickException(str(e))
    distance = abs(record.k11 - k11) + abs(record.k22 - k22)
    t1, t2, t3 = record.params.as_tuple()
    click.echo(f"index {record.index}: t=({t1}, {t2}, {t3}) k11={record.k11:.9g} "
               f"k22={record.k22:.9g} vf={record.vf:.9g} distance={distance:.6g}")


@db_cli.command("plot")
@click.option("--db", "db_dir", type=click.Path(file_okay=False),
              default=DEFAULT_RUN_CONFIG["database"]["path"], show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Figure path (default properties.png inside the database directory).")
def db_plot(db_dir, out_path):
    """Scatter of k11 against k22 over the database, coloured by volume fraction."""
    out_path = out_path or os.path.join(db_dir, "properties.png")
    try:
        db = load(db_dir)
        render_database(out_path, db)
    except USER_ERRORS as e:
        raise click.ClickException(str(e))
    click.echo(f"{len(db)} cells plotted to {out_path}")


# -- macro scale ------------------------------------------------------------------

@click.command("solve")
@with_appcontext
@run_options
@click.option("--design", "design_path", type=click.Path(exists=True, dir_okay=False),
              help="design.csv to place into the design elements.")
def solve_cmd(scenario, config_path, out_dir, assignments, design_path):
    """Forward solve of a configured model, with its objective value."""
    config = load_config(config_path, scenario, assignments, out_dir)
    header = f"config {config_hash(config)}"
    try:
        model = build_model(config)
        design = None
        if design_path:
            elements, design = read_design_csv(design_path)
            if not np.array_equal(elements, model.design_elements):
                raise click.ClickException(f"{design_path} does not match the model's design elements")
        state = model.solve(design)
        objective = build_objective(objective_spec(config), model)
        if hasattr(objective, "calibrate") and not objective.calibrated:
            objective.calibrate(model.solve())
        value = objective.value(state)
        directory = run_directory(config)
        write_state_outputs(directory, model, state, header)
        inflow, outflow = boundary_flux_balance(model.mesh, state.kappa, state.T, model.bc)
    except USER_ERRORS as e:
        raise click.ClickException(str(e))
    click.echo(f"T range: [{state.T.min():.6g}, {state.T.max():.6g}]")
    click.echo(f"flux in/out: {inflow:.9g} / {outflow:.9g}")
    click.echo(f"objective: {value:.9g}")
    for name, v in objective.components(state).items():
        click.echo(f"  {name}: {v:.9g}")
    click.echo(f"outputs in {directory}")


@click.command("optimize")
@with_appcontext
@run_options
def optimize_cmd(scenario, config_path, out_dir, assignments):
    """Optimize the design field of a scenario and write its run directory."""
    config = load_config(config_path, scenario, assignments, out_dir)
    header = f"config {config_hash(config)}"
    try:
        problem = build_problem(config)
        directory = run_directory(config)
    except USER_ERRORS as e:
        raise click.ClickException(str(e))
    save_run_config(config, os.path.join(directory, RUN_CONFIG_FILE))
    elements = problem.model.design_elements

    def checkpoint(iteration, design):
        os.makedirs(os.path.join(directory, CHECKPOINT_DIR), exist_ok=True)
        write_design_csv(os.path.join(directory, CHECKPOINT_DIR, f"design_{iteration:04d}.csv"),
                         elements, design, header)

    try:
        result = optimize(problem, checkpoint)
    except OptimizationError as e:
        if e.result is not None and e.result.history:
            write_history_csv(os.path.join(directory, "history.csv"), e.result.history, header)
            write_design_csv(os.path.join(directory, "design.csv"), elements, e.result.design, header)
        raise click.ClickException(f"optimization failed: {e}")
    except USER_ERRORS as e:
        raise click.ClickException(str(e))

    write_history_csv(os.path.join(directory, "history.csv"), result.history, header)
    write_design_csv(os.path.join(directory, "design.csv"), elements, result.design, header)
    write_state_outputs(directory, problem.model, result.state, header,
                        initial_T=problem.model.solve(problem.x0).T)
    summary = build_summary(problem, result, config)
    write_summary(summary, directory)

    click.echo(f"termination: {result.termination} after {result.iterations} iterations")
    click.echo(f"initial objective: {result.initial_value:.9g}")
    click.echo(f"final objective: {result.final_value:.9g}")
    for name, value in result.history[-1].components.items():
        click.echo(f"  {name}: {value:.9g}")
    if "reversed_fraction" in summary:
        click.echo(f"  reversed fraction: {summary['reversed_fraction']:.4f}")
    click.echo(f"outputs in {directory}")


@click.command("check-grad")
@with_appcontext
@run_options
@click.option("--nx", type=int, default=10, show_default=True)
@click.option("--ny", type=int, default=10, show_default=True)
@click.option("--samples", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=None, help="Random design seed (default optimizer.seed).")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Write the adjoint gradient here.")
def check_grad_cmd(scenario, config_path, out_dir, assignments, nx, ny, samples, seed, csv_path):
    """Adjoint gradient against central differences on a small mesh."""
    config = rescaled(load_config(config_path, scenario, assignments, out_dir), nx, ny)
    seed = config["optimizer"]["seed"] if seed is None else seed
    try:
        model = build_model(config)
        objective = build_objective(objective_spec(config), model)
        design = np.random.default_rng(seed).uniform(0.1, 0.9, size=(model.n_design, 2))
        check = check_gradient(model, objective, design, samples=samples, step=FD_STEP, seed=seed)
        if csv_path:
            write_gradient_csv(csv_path, model, objective.gradient(model.solve(design)),
                               f"config {config_hash(config)}")
    except USER_ERRORS as e:
        raise click.ClickException(str(e))
    worst = max(check.samples, key=lambda s: s.rel_error)
    click.echo(f"{len(check.samples)} partial derivatives on a {nx}x{ny} mesh")
    click.echo(f"max relative error: {check.max_rel_error:.3e} "
               f"(element {worst.element}, k{worst.component + 1}{worst.component + 1})")
    if not check.passed(FD_TOL):
        raise click.ClickException(f"gradient check failed: {check.max_rel_error:.3e} > {FD_TOL:g}")
    click.echo("gradient check passed")


@click.command("assemble")
@with_appcontext
@click.option("--run", "run_dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Run directory written by optimize.")
@click.option("--db", "db_dir", type=click.Path(file_okay=False), default=None,
              help="Database directory (default database.path of the run config).")
def assemble_cmd(run_dir, db_dir):
    """Substitute database cells for an optimized design and verify the result."""
    try:
        config = resolve_run_config(os.path.join(run_dir, RUN_CONFIG_FILE))
        summary = read_summary(run_dir)
        elements, values = read_design_csv(os.path.join(run_dir, "design.csv"))
        model = build_model(config)
        if not np.array_equal(elements, model.design_elements):
            raise AssemblyError("design.csv does not match the model's design elements")
        db = load(db_dir or config["database"]["path"])
        result = substitute(values, db, elements)
        image = rasterize(model, result, db)
        objective = build_objective(objective_spec(config, summary.get("normalizers")), model)
        j_optimized = objective.value(model.solve(values))
        j_assembled = verify_assembled(model, result, objective)
    except USER_ERRORS as e:
        raise click.ClickException(str(e))

    header = f"config {config_hash(config)}"
    write_scatter_csv(os.path.join(run_dir, "scatter.csv"), result, header)
    write_raster_pgm(os.path.join(run_dir, "assembled.pgm"), image)
    write_raster_png(os.path.join(run_dir, "assembled.png"), image)
    metrics = {
        "config_hash": config_hash(config),
        "mse": result.mse,
        "r2": result.r2,
        "distinct_cells": int(np.unique(result.indices).size),
        "objective_optimized": j_optimized,
        "objective_assembled": j_assembled,
    }
    with open(os.path.join(run_dir, "assembly.json"), "w", encoding="utf-8") as f:
        json.dump(metrics, f, indent=2, sort_keys=True)
        f.write("\n")
    click.echo(f"MSE: {result.mse:.6e}")
    click.echo(f"R^2: {result.r2:.6f}")
    click.echo(f"distinct cells: {metrics['distinct_cells']}")
    click.echo(f"objective optimized / assembled: {j_optimized:.9g} / {j_assembled:.9g}")
    click.echo(f"raster {image.shape[1]}x{image.shape[0]} written to {run_dir}")


def flux_highlight(config):
    """Rotator target elements of a run, or None when the objective has no rotator term."""
    o = config["objective"]
    if o["variant"] != "rotator" and not (o["variant"] == "weighted" and o["weights"].get("rotator", 0) > 0):
        return None
    m, r = config["mesh"], config["regions"]
    mesh = MacroMesh(int(m["nx"]), int(m["ny"]), float(m["h"]))
    length, width = r["target"]
    return rectangle_elements(mesh, r["center"], int(length), int(width)).indices


@click.command("report")
@with_appcontext
@click.option("--run", "run_dir", type=click.Path(exists=True, file_okay=False), required=True)
def report_cmd(run_dir):
    """Summarize an optimize run and render its figures."""
    try:
        summary = read_summary(run_dir)
        config = resolve_run_config(os.path.join(run_dir, RUN_CONFIG_FILE))
        mesh = config["mesh"]
        nodes_path = os.path.join(run_dir, "nodes.csv")
        grid = read_nodal_csv(nodes_path, mesh["nx"], mesh["ny"])
        difference = read_nodal_csv(nodes_path, mesh["nx"], mesh["ny"], column="dT")
        flux = read_flux_csv(os.path.join(run_dir, "flux.csv"), mesh["nx"], mesh["ny"])
        centerline = read_centerline_csv(os.path.join(run_dir, "centerline.csv"))
        history = read_history_csv(os.path.join(run_dir, "history.csv"))
        elements, values = read_design_csv(os.path.join(run_dir, "design.csv"))
        title = summary.get("scenario") or "custom"
        render_temperature(os.path.join(run_dir, "temperature.png"), grid, mesh["h"], title)
        render_difference(os.path.join(run_dir, "difference.png"), difference, mesh["h"], title)
        render_flux(os.path.join(run_dir, "flux.png"), flux, mesh["h"], flux_highlight(config), title)
        render_centerline(os.path.join(run_dir, "centerline.png"), centerline, title)
        render_design(os.path.join(run_dir, "design.png"), mesh["nx"], mesh["ny"], elements, values, title)
    except USER_ERRORS as e:
        raise click.ClickException(str(e))
    click.echo(f"scenario: {summary.get('scenario') or 'custom'} (config {summary['config_hash']})")
    click.echo(f"termination: {summary['termination']} after {summary['iterations']} iterations")
    click.echo(f"history: {len(history)} records")
    click.echo(f"objective: {summary['initial']['objective']:.9g} -> {summary['final']['objective']:.9g}")
    for name, value in summary["final"]["components"].items():
        click.echo(f"  {name}: {summary['initial']['components'].get(name, float('nan')):.9g} -> {value:.9g}")
    click.echo(f"flux balance (relative): {summary['flux_balance']['relative']:.3e}")
    click.echo(f"figures written to {run_dir}")


def register_cli(app) -> None:
    app.cli.add_command(db_cli)
    for command in (solve_cmd, optimize_cmd, check_grad_cmd, assemble_cmd, report_cmd):
        app.cli.add_command(command)
