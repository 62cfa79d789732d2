"""CGMN: conjugate gradients on ``(I - Q) u = R s``, plus plain Richardson.

``I - Q`` is symmetric positive semi-definite for a real matrix, and stays
self-adjoint on complex vectors, so textbook CG with the conjugated inner
product applies without re-symmetrization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discretization import HelmholtzProblem
from .sweeps import SweepPlan, SweepWorkspace, apply_I_minus_Q, apply_R, double_sweep

log = logging.getLogger(__name__)

BREAKDOWN_TOL = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-6
    max_iterations: Optional[int] = None
    record_true_residual: bool = False

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError(f"tolerance must lie in (0, 1), got {self.tolerance}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    def iteration_limit(self, n: int) -> int:
        """``max_iterations``, defaulting to ``10 * n``."""
        return 10 * n if self.max_iterations is None else self.max_iterations


@dataclass
class ConvergenceHistory:
    """Per-iteration residual norms, including the initial residual.

    ``preconditioned_residuals[k]`` is ``||R s - (I - Q) u_k||`` relative to
    ``||R s||``; ``true_residuals[k]`` is ``||s - A u_k|| / ||s||`` when
    recorded.  ``status`` is one of ``"converged"``, ``"max_iterations"``
    or ``"breakdown"``.
    """

    preconditioned_residuals: list[float] = field(default_factory=list)
    true_residuals: Optional[list[float]] = None
    iterations: int = 0
    converged: bool = False
    status: str = "running"

    @property
    def breakdown(self) -> bool:
        return self.status == "breakdown"

    @property
    def final_residual(self) -> float:
        return self.preconditioned_residuals[-1]


def _safe_norm(x: np.ndarray) -> float:
    n = float(np.linalg.norm(x))
    return n if n > 0.0 else 1.0


def _initial(problem: HelmholtzProblem, initial_guess) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(problem.rhs)
    dtype = np.result_type(problem.matrix.dtype, s.dtype,
                           np.float64 if initial_guess is None else np.asarray(initial_guess).dtype)
    if initial_guess is None:
        u = np.zeros(problem.dimension, dtype=dtype)
    else:
        u = np.array(initial_guess, dtype=dtype).ravel()
        if u.shape != (problem.dimension,):
            raise ValueError(f"initial guess has shape {u.shape}, expected ({problem.dimension},)")
    return s, u


def cgmn_solve(problem: HelmholtzProblem, plan: SweepPlan, config: SolverConfig = SolverConfig(),
               initial_guess: np.ndarray | None = None,
               callback: Callable[[np.ndarray], None] | None = None):
    """Solve ``A u = s`` by CG on the symmetric Kaczmarz system.

    Stops once ``||r_k|| <= tolerance * ||R s||`` for the recursively
    updated preconditioned residual ``r_k``.  ``callback(u_k)`` is called
    after every iteration.  A direction with ``<p, (I-Q) p>`` below
    ``1e-14 ||p||^2`` ends the run with status ``"breakdown"``.

    Returns:
        ``(solution, history)``.
    """
    matrix = problem.matrix
    s, u = _initial(problem, initial_guess)
    limit = config.iteration_limit(problem.dimension)
    work = SweepWorkspace.for_matrix(matrix, u.dtype)

    b = apply_R(s, matrix, plan).astype(u.dtype, copy=False)
    b_norm = _safe_norm(b)
    s_norm = _safe_norm(s)
    r = b - apply_I_minus_Q(u, matrix, plan, work) if np.any(u) else b.copy()

    history = ConvergenceHistory(true_residuals=[] if config.record_true_residual else None)

    def record(res):
        history.preconditioned_residuals.append(float(np.linalg.norm(res)) / b_norm)
        if history.true_residuals is not None:
            history.true_residuals.append(float(np.linalg.norm(s - matrix @ u)) / s_norm)

    record(r)
    p = r.copy()
    rr = np.vdot(r, r).real
    while True:
        if history.preconditioned_residuals[-1] <= config.tolerance:
            history.status, history.converged = "converged", True
            break
        if history.iterations >= limit:
            history.status = "max_iterations"
            break
        q = apply_I_minus_Q(p, matrix, plan, work)
        curvature = np.vdot(p, q).real
        if curvature <= BREAKDOWN_TOL * np.vdot(p, p).real:
            history.status = "breakdown"
            log.warning("CGMN breakdown at iteration %d (curvature %.3e)", history.iterations, curvature)
            break
        alpha = rr / curvature
        u += alpha * p
        r -= alpha * q
        rr_next = np.vdot(r, r).real
        p *= rr_next / rr
        p += r
        rr = rr_next
        history.iterations += 1
        record(r)
        if callback is not None:
            callback(u)
    if not history.converged:
        log.info("CGMN stopped without converging: %s after %d iterations",
                 history.status, history.iterations)
    return u, history


def richardson_solve(problem: HelmholtzProblem, plan: SweepPlan, config: SolverConfig = SolverConfig(),
                     initial_guess: np.ndarray | None = None,
                     callback: Callable[[np.ndarray], None] | None = None):
    """Stationary iteration ``u_{k+1} = Q u_k + R s`` (repeated double sweeps).

    The step ``u_{k+1} - u_k`` equals the preconditioned residual, so the
    history is directly comparable with ``cgmn_solve``.
    """
    matrix = problem.matrix
    s, u = _initial(problem, initial_guess)
    limit = config.iteration_limit(problem.dimension)
    b_norm = _safe_norm(apply_R(s, matrix, plan))
    s_norm = _safe_norm(s)
    s_cast = s.astype(u.dtype, copy=False)

    history = ConvergenceHistory(true_residuals=[] if config.record_true_residual else None)
    nxt = u.copy()
    double_sweep(nxt, matrix, s_cast, plan)
    while True:
        step = nxt - u
        history.preconditioned_residuals.append(float(np.linalg.norm(step)) / b_norm)
        if history.true_residuals is not None:
            history.true_residuals.append(float(np.linalg.norm(s - matrix @ u)) / s_norm)
        if history.preconditioned_residuals[-1] <= config.tolerance:
            history.status, history.converged = "converged", True
            break
        if history.iterations >= limit:
            history.status = "max_iterations"
            break
        u[:] = nxt
        double_sweep(nxt, matrix, s_cast, plan)
        history.iterations += 1
        if callback is not None:
            callback(u)
    return u, history
