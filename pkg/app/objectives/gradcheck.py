"""Adjoint gradients against central finite differences."""
import csv
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..fem.model import MacroModel

FD_STEP = 1e-6
FD_TOL = 1e-4
# Sensitivities below this share of the largest one are compared in absolute terms.
FLOOR_SHARE = 1e-3
ROUNDOFF_FACTOR = 10.0


@dataclass
class GradientSample:
    element: int
    component: int
    adjoint: float
    finite_difference: float
    rel_error: float
    noise: float = 0.0


@dataclass
class GradientCheck:
    samples: List[GradientSample]
    max_rel_error: float

    def passed(self, tol: float = FD_TOL) -> bool:
        return self.max_rel_error <= tol


def relative_error(adjoint: float, fd: float, scale: float) -> float:
    return abs(adjoint - fd) / max(abs(adjoint), abs(fd), scale)


def error_floor(grad_max: float, value: float, step: float, tol: float = FD_TOL) -> float:
    """
    Magnitude below which a partial derivative is judged on absolute error.

    Either a fixed share of the largest sensitivity, or the level at which the
    central difference itself is roundoff: a difference quotient of J carries an
    error near eps*|J|/step, so entries of that size cannot be resolved to `tol`.
    `check_gradient` raises it further per entry to the measured difference
    between the step-h and step-2h quotients.
    """
    roundoff = ROUNDOFF_FACTOR * np.finfo(float).eps * abs(value) / step
    return max(FLOOR_SHARE * grad_max, roundoff / tol, 1e-300)


def central_difference(model: MacroModel, objective, design: np.ndarray, local: int, comp: int,
                       step: float) -> float:
    plus = design.copy()
    minus = design.copy()
    plus[local, comp] += step
    minus[local, comp] -= step
    return (objective.value(model.solve(plus)) - objective.value(model.solve(minus))) / (2 * step)


def check_gradient(model: MacroModel, objective, design: np.ndarray, samples: int = 20,
                   step: float = FD_STEP, seed: int = 0) -> GradientCheck:
    design = np.asarray(design, dtype=float)
    state = model.solve(design)
    if hasattr(objective, "calibrate") and not objective.calibrated:
        objective.calibrate(state)
    value = objective.value(state)
    grad = objective.gradient(state)

    design_idx = model.design_elements
    rng = np.random.default_rng(seed)
    picked = rng.choice(design.shape[0], size=min(samples, design.shape[0]), replace=False)
    grad_max = float(np.max(np.abs(grad[design_idx]))) if design_idx.size else 0.0
    scale = error_floor(grad_max, value, step)

    results = []
    for local in np.sort(picked):
        element = int(design_idx[local])
        for comp in range(2):
            fd = central_difference(model, objective, design, local, comp, step)
            # step-h and step-2h quotients agree to truncation order; their gap is roundoff
            noise = abs(fd - central_difference(model, objective, design, local, comp, 2 * step))
            adj = float(grad[element, comp])
            floor = max(scale, ROUNDOFF_FACTOR * noise / FD_TOL)
            results.append(GradientSample(element, comp, adj, fd, relative_error(adj, fd, floor), noise))
    max_err = max((s.rel_error for s in results), default=0.0)
    return GradientCheck(results, max_err)


def write_gradient_csv(path, model: MacroModel, grad: np.ndarray, header: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header:
            f.write(f"# {header}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["element", "dJ/dk11", "dJ/dk22"])
        for element in model.design_elements:
            writer.writerow([int(element), f"{grad[element, 0]:.12g}", f"{grad[element, 1]:.12g}"])
