"""
Case-study setups built from run configurations.

Every scenario lives on a 75 x 50 unit-element mesh with the hot source on the
left and the cold sink on the right edge. The non-design matrix carries the
homogenized value of the 50% circular-hole cell. Inside the inner circle sits
either more matrix, a smaller insulating hole (floor conductivity within
`r_hole`) or a 10x weaker inclusion filling the circle, and the design domain
is the ring or the whole outer disk.
"""
from typing import Any, Dict, Optional

import numpy as np

from ..fem.mesh import BoundaryConditions, MacroMesh, edge_nodes, segment_nodes
from ..fem.model import MacroModel
from ..fem.solver import KAPPA_FLOOR
from ..objectives import ObjectiveSpec, build_objective, disk_elements, ring_elements
from ..run_config import SCENARIOS, ConfigError, scenario_config
from .descent import OptimizationProblem

INNER_KINDS = ("matrix", "insulator", "inclusion")
DESIGN_KINDS = ("ring", "disk")


class ScenarioError(ConfigError):
    pass


def build_model(config: Dict[str, Any]) -> MacroModel:
    m = config["mesh"]
    mesh = MacroMesh(int(m["nx"]), int(m["ny"]), float(m["h"]))

    hot, cold = config["bc"]["hot"], config["bc"]["cold"]
    try:
        hot_nodes = segment_nodes(mesh, hot["edge"], hot["span"]) if hot.get("span") else edge_nodes(mesh, hot["edge"])
        cold_nodes = edge_nodes(mesh, cold["edge"])
    except ValueError as e:
        raise ConfigError(str(e), "bc")
    bc = BoundaryConditions.hot_cold(hot_nodes, hot["t"], cold_nodes, cold["t"])

    r = config["regions"]
    center = tuple(float(c) for c in r["center"])
    r_in, r_out = float(r["r_in"]), float(r["r_out"])
    if not 0 < r_in < r_out:
        raise ConfigError(f"radii must satisfy 0 < r_in < r_out, got {r_in}, {r_out}", "regions")
    r_hole = float(r["r_hole"])
    if r["inner"] == "insulator" and not 0 < r_hole <= r_in:
        raise ConfigError(f"hole radius must satisfy 0 < r_hole <= r_in, got {r_hole}", "regions.r_hole")
    if r["inner"] not in INNER_KINDS:
        raise ConfigError(f"expected one of {', '.join(INNER_KINDS)}, got {r['inner']!r}", "regions.inner")
    if r["design"] not in DESIGN_KINDS:
        raise ConfigError(f"expected one of {', '.join(DESIGN_KINDS)}, got {r['design']!r}", "regions.design")

    mat = config["materials"]
    matrix_kappa = float(mat["matrix_kappa"])
    kappa = np.full((mesh.n_elements, 2), matrix_kappa)
    if r["inner"] == "insulator":
        kappa[disk_elements(mesh, center, r_hole, name="hole").indices] = KAPPA_FLOOR
    elif r["inner"] == "inclusion":
        kappa[disk_elements(mesh, center, r_in, name="inner").indices] = float(mat["inclusion_kappa"])

    if r["design"] == "ring":
        design = ring_elements(mesh, center, r_in, r_out).mask(mesh.n_elements)
    else:
        design = disk_elements(mesh, center, r_out, name="design").mask(mesh.n_elements)
    if not design.any():
        raise ConfigError("design domain contains no elements", "regions")
    kappa[design] = matrix_kappa

    regions = {"center": center, "r_in": r_in, "r_out": r_out, "target": tuple(r["target"]),
               "probes": r.get("probes"), "inner": r["inner"], "r_hole": r_hole}
    return MacroModel(mesh=mesh, bc=bc, kappa=kappa, design_mask=design, matrix_kappa=matrix_kappa,
                      regions=regions, name=config.get("scenario"))


def objective_spec(config: Dict[str, Any], normalizers: Optional[Dict[str, float]] = None) -> ObjectiveSpec:
    o = config["objective"]
    return ObjectiveSpec(variant=o["variant"], weights=dict(o["weights"]), cloak_region=o["cloak_region"],
                         direction=tuple(o["direction"]), normalizers=normalizers)


def build_problem(config: Dict[str, Any]) -> OptimizationProblem:
    model = build_model(config)
    objective = build_objective(objective_spec(config), model)
    opt = config["optimizer"]
    x0 = model.initial_design()
    amplitude = float(opt.get("perturbation") or 0.0)
    if amplitude < 0:
        raise ConfigError(f"must be non-negative, got {amplitude}", "optimizer.perturbation")
    if amplitude:
        x0 = x0 + np.random.default_rng(int(opt["seed"])).uniform(-amplitude, amplitude, size=x0.shape)
    x0 = np.clip(x0, opt["k_min"], opt["k_max"])
    return OptimizationProblem(
        x0=x0,
        model=model,
        objective=objective,
        k_min=float(opt["k_min"]),
        k_max=float(opt["k_max"]),
        max_iter=int(opt["max_iter"]),
        tol=float(opt["tol"]),
        move_limit=float(opt["move_limit"]),
        max_halvings=int(opt["max_halvings"]),
        checkpoint_every=int(opt["checkpoint_every"]),
        name=config.get("scenario"),
        config=config,
    )


def make_scenario(name: str) -> OptimizationProblem:
    if name not in SCENARIOS:
        raise ScenarioError(f"unknown scenario '{name}'; valid scenarios: {', '.join(SCENARIOS)}", "scenario")
    return build_problem(scenario_config(name))
