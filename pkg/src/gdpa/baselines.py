"""Simplified comparison solvers: quadratic penalty and inexact augmented
Lagrangian.

Both are deliberately plain (fixed inner iteration counts, constant inner
step, no acceleration): the point is interface-comparable convergence traces
over the same problem contract, not faithful reproductions of the published
competitor codebases. Traces reuse the same record schema as the primary
solver, with ``r`` counting cumulative inner steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .metrics import IterationRecord, make_record
from .problem import ConstrainedProblem
from .solver import (
    TERM_BUDGET,
    TERM_FEASIBILITY,
    TERM_NUMERICAL,
    NumericalFailure,
    SolveResult,
)
from .vec import NonFiniteError, as_vector, project


@dataclass
class PenaltyConfig:
    rho0: float = 1.0
    rho_growth: float = 10.0
    inner_iters: int = 200
    inner_step: float = 1e-3
    outer_iters: int = 5
    feas_tol: float = 1e-6
    record_every: int = 10
    dense_until: int = 1000

    def __post_init__(self):
        if not (self.rho0 > 0 and self.inner_step > 0 and self.feas_tol > 0):
            raise ValueError("rho0, inner_step, and feas_tol must be positive")
        if not self.rho_growth > 1:
            raise ValueError("rho_growth must exceed 1")
        if self.inner_iters < 1 or self.outer_iters < 1 or self.record_every < 1:
            raise ValueError("iteration counts must be positive")


@dataclass
class AlmConfig(PenaltyConfig):
    """Penalty settings plus the classical multiplier update lam <- [lam + rho*g]_+.

    The penalty parameter only grows when feasibility stalls (violation not
    reduced by at least a factor of 0.9 over the previous outer round).
    """

    stall_factor: float = 0.9


def _record_due(step: int, cfg) -> bool:
    return step % cfg.record_every == 0 or step <= cfg.dense_until


def solve_penalty(problem: ConstrainedProblem, cfg: PenaltyConfig, x0) -> SolveResult:
    """Outer loop over growing penalties, inner projected-gradient descent on
    f(x) + (rho/2)||g_+(x)||^2. The trace carries a zero multiplier."""
    m = problem.num_constraints
    x = project(problem.projection, as_vector(x0, "x0"))
    lam0 = np.zeros(m)
    trace: List[IterationRecord] = []
    termination = TERM_BUDGET
    failure = ""
    T_eps: Optional[int] = None
    step = 0
    weight_sum = 0.0
    x_accum = np.zeros_like(x)
    rho = cfg.rho0
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            for _outer in range(cfg.outer_iters):
                for _ in range(cfg.inner_iters):
                    step += 1
                    gx = problem.g(x)
                    grad = problem.grad_f(x)
                    jac = problem.jacobian(x) if m else None
                    weight_sum += 1.0 / rho
                    x_accum += x / rho
                    if _record_due(step, cfg):
                        trace.append(make_record(problem, x, lam0, gx, grad, jac,
                                                 step, cfg.inner_step, rho, 0.0, 0.0))
                    gp = np.maximum(gx, 0.0) if m else gx
                    if T_eps is None and m and float(np.linalg.norm(gp)) <= cfg.feas_tol:
                        T_eps = step
                    direction = grad if not m else grad + rho * (jac.T @ gp)
                    x = project(problem.projection, x - cfg.inner_step * direction)
                    if not np.all(np.isfinite(x)):
                        raise NumericalFailure(
                            f"penalty inner step diverged at step {step}", step)
                viol = float(np.linalg.norm(np.maximum(problem.g(x), 0.0))) if m else 0.0
                if viol <= cfg.feas_tol:
                    termination = TERM_FEASIBILITY
                    if T_eps is None:
                        T_eps = step
                    break
                rho *= cfg.rho_growth
    except (NumericalFailure, NonFiniteError) as exc:
        termination = TERM_NUMERICAL
        failure = str(exc)
    x_avg = x_accum / weight_sum if weight_sum > 0 else x.copy()
    return SolveResult(x, lam0.copy(), x_avg, lam0.copy(), termination, T_eps,
                       trace, None, failure)


def solve_alm(problem: ConstrainedProblem, cfg: AlmConfig, x0, lambda0=None) -> SolveResult:
    """Inexact augmented Lagrangian: inner projected-gradient minimization of
    f + (rho/2)||[g + lam/rho]_+||^2 - ||lam||^2/(2*rho), then the classical
    multiplier update."""
    m = problem.num_constraints
    x = project(problem.projection, as_vector(x0, "x0"))
    lam = np.zeros(m) if lambda0 is None else as_vector(lambda0, "lambda0").copy()
    if lam.size != m:
        raise ValueError(f"lambda0 must have length {m}")
    if np.any(lam < 0):
        raise ValueError("lambda0 must be componentwise nonnegative")
    trace: List[IterationRecord] = []
    termination = TERM_BUDGET
    failure = ""
    T_eps: Optional[int] = None
    step = 0
    weight_sum = 0.0
    x_accum = np.zeros_like(x)
    lam_accum = np.zeros_like(lam)
    rho = cfg.rho0
    prev_viol = np.inf
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            for _outer in range(cfg.outer_iters):
                for _ in range(cfg.inner_iters):
                    step += 1
                    gx = problem.g(x)
                    grad = problem.grad_f(x)
                    jac = problem.jacobian(x) if m else None
                    weight_sum += 1.0 / rho
                    x_accum += x / rho
                    lam_accum += lam / rho
                    if _record_due(step, cfg):
                        # tau=0 turns the merit value into the classic
                        # augmented Lagrangian this method actually minimizes.
                        trace.append(make_record(problem, x, lam, gx, grad, jac,
                                                 step, cfg.inner_step, rho, 0.0, 0.0))
                    if m:
                        shifted = np.maximum(rho * gx + lam, 0.0)
                        direction = grad + jac.T @ shifted
                        gp = np.maximum(gx, 0.0)
                        if T_eps is None and float(np.linalg.norm(gp)) <= cfg.feas_tol:
                            T_eps = step
                    else:
                        direction = grad
                        if T_eps is None:
                            T_eps = step
                    x = project(problem.projection, x - cfg.inner_step * direction)
                    if not np.all(np.isfinite(x)):
                        raise NumericalFailure(f"ALM inner step diverged at step {step}", step)
                if m:
                    gx = problem.g(x)
                    lam = np.maximum(lam + rho * gx, 0.0)
                    viol = float(np.linalg.norm(np.maximum(gx, 0.0)))
                    if viol <= cfg.feas_tol:
                        termination = TERM_FEASIBILITY
                        if T_eps is None:
                            T_eps = step
                        break
                    if viol > cfg.stall_factor * prev_viol:
                        rho *= cfg.rho_growth
                    prev_viol = viol
                else:
                    termination = TERM_FEASIBILITY
                    break
    except (NumericalFailure, NonFiniteError) as exc:
        termination = TERM_NUMERICAL
        failure = str(exc)
    if weight_sum > 0:
        x_avg = x_accum / weight_sum
        lam_avg = lam_accum / weight_sum
    else:
        x_avg, lam_avg = x.copy(), lam.copy()
    return SolveResult(x, lam, x_avg, lam_avg, termination, T_eps, trace, None, failure)
