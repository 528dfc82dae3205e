"""
Functionality objectives and their adjoint gradients.

All gradients are per element, shape (ne, 2) for (d/dk11, d/dk22), and are
exactly zero outside the design domain. With K T = F and Dirichlet values
eliminated, dJ/dk = dJ/dk|explicit - lam^T (dK/dk) T where K_ff lam_f = dJ/dT_f.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..fem.model import MacroModel
from ..fem.solver import ThermalState, centroid_gradients
from .regions import (ProbePoints, RegionMask, cloak_query, exterior_nodes, outside_nodes,
                      probe_points, probe_points_at, rectangle_elements)

logger = logging.getLogger(__name__)

VARIANTS = ("cloak-exterior", "cloak-everywhere", "concentrator", "rotator", "weighted")
PROBE_TOL = 1e-12


class ObjectiveError(Exception):
    pass


class DegenerateProbeError(ObjectiveError):
    pass


def _masked(grad: np.ndarray, design_mask: Optional[np.ndarray]) -> np.ndarray:
    if design_mask is not None:
        grad = grad.copy()
        grad[~design_mask] = 0.0
    return grad


# -- cloak --------------------------------------------------------------------

def eval_cloak(T: np.ndarray, t_ref: np.ndarray, query: RegionMask) -> float:
    if len(query) == 0:
        raise ObjectiveError(f"cloak query region '{query.name}' is empty")
    idx = query.indices
    rel = (T[idx] - t_ref[idx]) / t_ref[idx]
    return float(np.dot(rel, rel))


def grad_cloak(state: ThermalState, t_ref: np.ndarray, query: RegionMask,
               design_mask: Optional[np.ndarray] = None) -> np.ndarray:
    if len(query) == 0:
        raise ObjectiveError(f"cloak query region '{query.name}' is empty")
    idx = query.indices
    rhs = np.zeros(state.mesh.n_nodes)
    rhs[idx] = 2.0 * (state.T[idx] - t_ref[idx]) / t_ref[idx] ** 2
    return _masked(state.sensitivity(state.adjoint(rhs)), design_mask)


# -- concentrator -------------------------------------------------------------

def _probe_ratio(T: np.ndarray, probes: ProbePoints) -> Tuple[float, float, float]:
    ta, tb, tc, td = T[probes.as_array()]
    den = ta - td
    if abs(den) < PROBE_TOL:
        raise DegenerateProbeError(f"probe temperatures T_A={ta:.6g} and T_D={td:.6g} coincide")
    return (tb - tc) / den, tb - tc, den


def eval_concentrator(T: np.ndarray, probes: ProbePoints) -> float:
    ratio, _, _ = _probe_ratio(T, probes)
    return float(abs(ratio))


def grad_concentrator(state: ThermalState, probes: ProbePoints,
                      design_mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Gradient of (J_ct - 1)^2 through one adjoint solve."""
    ratio, num, den = _probe_ratio(state.T, probes)
    outer = 2.0 * (abs(ratio) - 1.0) * np.sign(ratio)
    rhs = np.zeros(state.mesh.n_nodes)
    np.add.at(rhs, probes.as_array(), outer * np.array([-num / den ** 2, 1.0 / den, -1.0 / den, num / den ** 2]))
    return _masked(state.sensitivity(state.adjoint(rhs)), design_mask)


# -- rotator ------------------------------------------------------------------

def eval_rotator(flux: np.ndarray, target: RegionMask, q_hat: Sequence[float] = (1.0, 0.0)) -> float:
    q = _unit(q_hat)
    return float(np.sum(flux[target.indices] @ q))


def grad_rotator(state: ThermalState, target: RegionMask, q_hat: Sequence[float] = (1.0, 0.0),
                 design_mask: Optional[np.ndarray] = None) -> np.ndarray:
    q = _unit(q_hat)
    mesh = state.mesh
    b = centroid_gradients(mesh.h)
    omega = target.indices
    grads = state.element_temperatures[omega] @ b.T

    direct = np.zeros((mesh.n_elements, 2))
    direct[omega] = -q[None, :] * grads

    # dJ/dT = -sum over target of (kappa B L)^T q
    rhs = np.zeros(mesh.n_nodes)
    contrib = -(state.kappa[omega] * q[None, :]) @ b
    np.add.at(rhs, mesh.connectivity()[omega].ravel(), contrib.ravel())
    total = direct + state.sensitivity(state.adjoint(rhs))
    return _masked(total, design_mask)


def _unit(q_hat) -> np.ndarray:
    q = np.asarray(q_hat, dtype=float)
    norm = np.linalg.norm(q)
    if q.shape != (2,) or abs(norm - 1.0) > 1e-12:
        raise ObjectiveError(f"direction must be a unit 2-vector, got {q_hat}")
    return q


# -- objective objects --------------------------------------------------------

class CloakObjective:
    name = "cloak"

    def __init__(self, query: RegionMask, t_ref: np.ndarray, design_mask: np.ndarray):
        if len(query) == 0:
            raise ObjectiveError(f"cloak query region '{query.name}' is empty")
        self.query = query
        self.t_ref = t_ref
        self.design_mask = design_mask

    def value(self, state: ThermalState) -> float:
        return eval_cloak(state.T, self.t_ref, self.query)

    def gradient(self, state: ThermalState) -> np.ndarray:
        return grad_cloak(state, self.t_ref, self.query, self.design_mask)

    def components(self, state: ThermalState) -> Dict[str, float]:
        return {"cloak": self.value(state)}


class ConcentratorObjective:
    """Minimizes (J_ct - 1)^2; the index itself is reported as a component."""
    name = "concentrator"

    def __init__(self, probes: ProbePoints, design_mask: np.ndarray):
        self.probes = probes
        self.design_mask = design_mask

    def index(self, state: ThermalState) -> float:
        return eval_concentrator(state.T, self.probes)

    def value(self, state: ThermalState) -> float:
        return (self.index(state) - 1.0) ** 2

    def gradient(self, state: ThermalState) -> np.ndarray:
        return grad_concentrator(state, self.probes, self.design_mask)

    def components(self, state: ThermalState) -> Dict[str, float]:
        return {"concentrator": self.value(state), "index": self.index(state)}


class RotatorObjective:
    name = "rotator"

    def __init__(self, target: RegionMask, design_mask: np.ndarray, q_hat=(1.0, 0.0)):
        if len(target) == 0:
            raise ObjectiveError(f"rotator target region '{target.name}' is empty")
        self.target = target
        self.q_hat = _unit(q_hat)
        self.design_mask = design_mask

    def value(self, state: ThermalState) -> float:
        return eval_rotator(state.flux, self.target, self.q_hat)

    def gradient(self, state: ThermalState) -> np.ndarray:
        return grad_rotator(state, self.target, self.q_hat, self.design_mask)

    def components(self, state: ThermalState) -> Dict[str, float]:
        return {"rotator": self.value(state)}

    def reversed_fraction(self, state: ThermalState) -> float:
        """Share of target elements whose flux points against the direction."""
        return float(np.mean(state.flux[self.target.indices] @ self.q_hat < 0))


class WeightedObjective:
    """sum_i w_i J_i / |J_i^0| with J^0 frozen at the first calibration."""
    name = "weighted"

    def __init__(self, terms: List[Tuple[float, object]], normalizers: Optional[Dict[str, float]] = None):
        terms = [(float(w), obj) for w, obj in terms]
        if any(w < 0 for w, _ in terms):
            raise ObjectiveError("objective weights must be non-negative")
        self.terms = [(w, obj) for w, obj in terms if w > 0]
        if not self.terms:
            raise ObjectiveError("at least one objective weight must be positive")
        self.normalizers = dict(normalizers or {})

    @property
    def calibrated(self) -> bool:
        return all(obj.name in self.normalizers for _, obj in self.terms)

    def calibrate(self, state: ThermalState) -> Dict[str, float]:
        for _, obj in self.terms:
            if obj.name in self.normalizers:
                continue
            j0 = obj.value(state)
            if j0 == 0 or not np.isfinite(j0):
                raise ObjectiveError(
                    f"normalizer for the {obj.name} term is {j0}; the term is already satisfied, drop its weight")
            self.normalizers[obj.name] = abs(j0)
            logger.info("Frozen %s normalizer J0 = %.6g", obj.name, j0)
        return dict(self.normalizers)

    def _require_calibrated(self):
        if not self.calibrated:
            raise ObjectiveError("weighted objective used before its normalizers were captured")

    def value(self, state: ThermalState) -> float:
        self._require_calibrated()
        return float(sum(w * obj.value(state) / self.normalizers[obj.name] for w, obj in self.terms))

    def gradient(self, state: ThermalState) -> np.ndarray:
        self._require_calibrated()
        total = np.zeros((state.mesh.n_elements, 2))
        for w, obj in self.terms:
            total += (w / self.normalizers[obj.name]) * obj.gradient(state)
        return total

    def components(self, state: ThermalState) -> Dict[str, float]:
        out = {}
        for _, obj in self.terms:
            out.update(obj.components(state))
        return out


def eval_weighted(state: ThermalState, objective: WeightedObjective) -> float:
    return objective.value(state)


def grad_weighted(state: ThermalState, objective: WeightedObjective) -> np.ndarray:
    return objective.gradient(state)


# -- construction from an ObjectiveSpec --------------------------------------

@dataclass
class ObjectiveSpec:
    variant: str
    weights: Dict[str, float] = field(default_factory=lambda: {"cloak": 1.0, "concentrator": 0.0, "rotator": 0.0})
    cloak_region: str = "exterior"
    direction: Tuple[float, float] = (1.0, 0.0)
    normalizers: Optional[Dict[str, float]] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ObjectiveError(f"unknown objective variant '{self.variant}', expected one of {', '.join(VARIANTS)}")
        unknown = set(self.weights) - {"cloak", "concentrator", "rotator"}
        if unknown:
            raise ObjectiveError(f"unknown objective weights: {sorted(unknown)}")
        if any(w < 0 for w in self.weights.values()):
            raise ObjectiveError("objective weights must be non-negative")
        if self.variant == "weighted" and not any(w > 0 for w in self.weights.values()):
            raise ObjectiveError("weighted objective needs at least one positive weight")


def _geometry(model: MacroModel):
    regions = model.regions
    missing = {"center", "r_in", "r_out"} - set(regions)
    if missing:
        raise ObjectiveError(f"model is missing region data {sorted(missing)}")
    return tuple(regions["center"]), float(regions["r_in"]), float(regions["r_out"])


def _cloak(model: MacroModel, region_kind: str) -> CloakObjective:
    center, r_in, r_out = _geometry(model)
    if region_kind == "exterior":
        region = exterior_nodes(model.mesh, center, r_out)
    elif region_kind == "everywhere":
        region = outside_nodes(model.mesh, center, r_in)
    else:
        raise ObjectiveError(f"unknown cloak region '{region_kind}', expected 'exterior' or 'everywhere'")
    t_ref = model.reference_model().solve().T
    return CloakObjective(cloak_query(region, t_ref, model.bc), t_ref, model.design_mask)


def _concentrator(model: MacroModel) -> ConcentratorObjective:
    center, r_in, r_out = _geometry(model)
    if model.regions.get("probes"):
        probes = probe_points_at(model.mesh, model.regions["probes"], center[1])
    else:
        probes = probe_points(model.mesh, center, r_in, r_out)
    return ConcentratorObjective(probes, model.design_mask)


def _rotator(model: MacroModel, direction) -> RotatorObjective:
    center, _, _ = _geometry(model)
    length, width = model.regions.get("target", (20, 4))
    target = rectangle_elements(model.mesh, center, int(length), int(width))
    return RotatorObjective(target, model.design_mask, direction)


def build_objective(spec: ObjectiveSpec, model: MacroModel):
    if spec.variant == "cloak-exterior":
        return _cloak(model, "exterior")
    if spec.variant == "cloak-everywhere":
        return _cloak(model, "everywhere")
    if spec.variant == "concentrator":
        return _concentrator(model)
    if spec.variant == "rotator":
        return _rotator(model, spec.direction)
    terms = []
    w = spec.weights
    if w.get("cloak", 0) > 0:
        terms.append((w["cloak"], _cloak(model, spec.cloak_region)))
    if w.get("concentrator", 0) > 0:
        terms.append((w["concentrator"], _concentrator(model)))
    if w.get("rotator", 0) > 0:
        terms.append((w["rotator"], _rotator(model, spec.direction)))
    return WeightedObjective(terms, spec.normalizers)
