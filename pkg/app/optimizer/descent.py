"""
Box-constrained projected-gradient descent.

Step length starts from a Barzilai-Borwein estimate, each component moves by at
most `move_limit` per iteration, and the step is halved until the sufficient
decrease test passes, so the accepted objective sequence never increases.
A run converges when the projected gradient max|x - P(x - g)| drops below `tol`.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..fem.model import MacroModel
from ..fem.solver import SolverError, ThermalState
from ..objectives.functionals import ObjectiveError

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4


class OptimizationError(Exception):
    def __init__(self, message: str, result: "OptimizationResult" = None):
        super().__init__(message)
        self.result = result


class ModelEvaluator:
    """Forward solve + objective for the design elements of a macro model."""

    def __init__(self, model: MacroModel, objective):
        self.model = model
        self.objective = objective

    def prepare(self, x: np.ndarray) -> None:
        if hasattr(self.objective, "calibrate") and not self.objective.calibrated:
            self.objective.calibrate(self.model.solve(x))

    def evaluate(self, x: np.ndarray) -> Tuple[float, ThermalState]:
        state = self.model.solve(x)
        return self.objective.value(state), state

    def gradient(self, state: ThermalState) -> np.ndarray:
        return self.objective.gradient(state)[self.model.design_mask]

    def components(self, state: ThermalState) -> Dict[str, float]:
        return self.objective.components(state)


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    components: Dict[str, float]
    max_change: float
    step: float


@dataclass
class OptimizationResult:
    design: np.ndarray
    history: List[IterationRecord]
    termination: str
    state: Optional[ThermalState] = field(default=None, repr=False, compare=False)

    @property
    def initial_value(self) -> float:
        return self.history[0].objective

    @property
    def final_value(self) -> float:
        return self.history[-1].objective

    @property
    def iterations(self) -> int:
        return self.history[-1].iteration


@dataclass
class OptimizationProblem:
    x0: np.ndarray
    model: Optional[MacroModel] = None
    objective: object = None
    evaluator: object = None
    k_min: float = 1e-9
    k_max: float = 1.0
    max_iter: int = 500
    tol: float = 1e-4
    move_limit: float = 0.05
    max_halvings: int = 20
    checkpoint_every: int = 50
    name: Optional[str] = None
    config: Optional[dict] = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.evaluator is None:
            if self.model is None or self.objective is None:
                raise ValueError("an optimization problem needs a model and an objective, or an evaluator")
            self.evaluator = ModelEvaluator(self.model, self.objective)
        if self.x0.size == 0:
            raise ValueError("design set is empty")
        if self.k_min > self.k_max:
            raise ValueError(f"bounds are inverted: [{self.k_min}, {self.k_max}]")
        if np.any(self.x0 < self.k_min) or np.any(self.x0 > self.k_max):
            raise ValueError(f"initial design outside [{self.k_min}, {self.k_max}]")
        if self.max_iter < 0 or self.tol <= 0 or self.move_limit <= 0:
            raise ValueError("max_iter must be >= 0 and tol, move_limit must be positive")


def projected_gradient(x: np.ndarray, g: np.ndarray, lo: float, hi: float) -> float:
    """Largest component of x - P(x - g); zero exactly at a KKT point of the box problem."""
    return float(np.max(np.abs(x - np.clip(x - g, lo, hi))))


def optimize(problem: OptimizationProblem,
             checkpoint: Optional[Callable[[int, np.ndarray], None]] = None) -> OptimizationResult:
    ev = problem.evaluator
    lo, hi = problem.k_min, problem.k_max
    x = problem.x0.copy()
    history: List[IterationRecord] = []

    def abort(reason: str, message: str, state=None):
        result = OptimizationResult(x.copy(), history, reason, state)
        logger.error("Optimization %s aborted (%s): %s", problem.name or "", reason, message)
        raise OptimizationError(message, result)

    try:
        ev.prepare(x)
        f, state = ev.evaluate(x)
    except SolverError as e:
        abort("solver-failure", f"initial forward solve failed: {e}")
    except ObjectiveError as e:
        abort("objective-failure", f"initial objective failed: {e}")
    if not math.isfinite(f):
        abort("non-finite", f"initial objective is {f}")
    g = ev.gradient(state)
    history.append(IterationRecord(0, float(f), ev.components(state), 0.0, 0.0))
    logger.info("Optimization %s start: J = %.6g over %d design elements",
                problem.name or "", f, x.shape[0])

    alpha = None
    termination = "max-iter"
    for it in range(1, problem.max_iter + 1):
        if projected_gradient(x, g, lo, hi) < problem.tol:
            termination = "converged"
            break
        if alpha is None:
            alpha = problem.move_limit / float(np.max(np.abs(g)))

        trial = alpha
        accepted = False
        dx = np.zeros_like(x)
        for _ in range(problem.max_halvings + 1):
            x_new = np.clip(x + np.clip(-trial * g, -problem.move_limit, problem.move_limit), lo, hi)
            dx = x_new - x
            if not np.any(dx):
                break
            try:
                f_new, state_new = ev.evaluate(x_new)
            except SolverError as e:
                abort("solver-failure", f"forward solve failed at iteration {it}: {e}", state)
            except ObjectiveError as e:
                abort("objective-failure", f"objective failed at iteration {it}: {e}", state)
            if math.isfinite(f_new) and f_new <= f + ARMIJO_C * float(np.sum(g * dx)):
                accepted = True
                break
            trial *= 0.5

        if not accepted:
            termination = "no-descent"
            logger.info("No descent after %d halvings at iteration %d", problem.max_halvings, it)
            break

        try:
            g_new = ev.gradient(state_new)
        except SolverError as e:
            abort("solver-failure", f"adjoint solve failed at iteration {it}: {e}", state)
        except ObjectiveError as e:
            abort("objective-failure", f"gradient failed at iteration {it}: {e}", state)
        if not np.all(np.isfinite(g_new)):
            abort("non-finite", f"gradient is not finite at iteration {it}", state)

        s_y = float(np.sum(dx * (g_new - g)))
        alpha = float(np.sum(dx * dx)) / s_y if s_y > 0 else 2.0 * trial
        x, f, g, state = x_new, f_new, g_new, state_new
        change = float(np.max(np.abs(dx)))
        history.append(IterationRecord(it, float(f), ev.components(state), change, trial))
        logger.debug("iter %4d  J = %.8g  max change = %.3e  step = %.3e", it, f, change, trial)

        if checkpoint and problem.checkpoint_every and it % problem.checkpoint_every == 0:
            checkpoint(it, x.copy())

    logger.info("Optimization %s finished (%s) after %d iterations: J = %.6g",
                problem.name or "", termination, history[-1].iteration, f)
    return OptimizationResult(x, history, termination, state)
