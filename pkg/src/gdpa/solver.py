"""Single-loop primal-dual solver with perturbed dual ascent.

Each iteration performs one projected-gradient step on the merit function in
the primal variable and one damped, perturbation-regularized ascent step in
the dual variable, restricted to an active set of constraints. The dual step
size grows like r^(1/3) while the primal step size and the perturbation decay
like r^(-1/3); their product with the dual step size is pinned to the damping
constant tau. Cost per iteration: one objective-gradient, one Jacobian, and
one fresh constraint evaluation (the constraint value at the new point is
reused by the following iteration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .metrics import IterationRecord, _stationarity_from_evals, make_record
from .problem import ConstrainedProblem, ProblemConstants
from .vec import NonFiniteError, _project_raw, as_vector, project

TERM_FEASIBILITY = "feasibility-stop"
TERM_BUDGET = "budget-exhausted"
TERM_NUMERICAL = "numerical-failure"


class NumericalFailure(RuntimeError):
    """A solver step produced non-finite values; carries iteration context."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        super().__init__(message)
        self.iteration = iteration


@dataclass
class GdpaConfig:
    """Hyperparameters of the solver.

    tau: dual damping constant in (0, 1); couples the dual step size and the
        perturbation weight through gamma_r * beta_r = tau.
    beta0: scale of the growing dual step size beta_r = beta0 * r^(1/3).
    alpha01/02/03: primal step schedule alpha_r = a01 / (a02 + a03 * r^(1/3)).
    eps_feas: threshold on the squared positive violation defining the
        feasibility stopping time.
    eps_stat: stationarity-norm threshold that must additionally hold before
        the solver declares success.
    record_every: trace-row modulus; iterations up to ``dense_until`` are
        always recorded to keep the early transient visible.
    """

    tau: float = 0.1
    beta0: float = 1.0
    alpha01: float = 1.0
    alpha02: float = 1.0
    alpha03: float = 1.0
    max_iters: int = 100_000
    eps_feas: float = 1e-6
    eps_stat: float = 1e-4
    record_every: int = 10
    dense_until: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie strictly between 0 and 1")
        for name in ("beta0", "alpha01", "alpha02", "alpha03", "eps_feas", "eps_stat"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1 or self.record_every < 1:
            raise ValueError("max_iters and record_every must be positive integers")
        if self.dense_until < 0:
            raise ValueError("dense_until must be nonnegative")

    def validate(self, constants: Optional[ProblemConstants] = None) -> List[str]:
        """Non-fatal sanity warnings (empty list when everything looks fine)."""
        notes = []
        if not self.alpha01 < self.alpha02:
            notes.append(
                f"alpha01={self.alpha01} >= alpha02={self.alpha02}; the recommended "
                "relation alpha01 < alpha02 is not satisfied (not enforced)")
        if constants is not None:
            rep = validate_tau(self, constants)
            if not rep.ok:
                notes.append(rep.message)
            rep = validate_alpha(self, constants, lambda_norm=0.0, r=1)
            if not rep.ok:
                notes.append(rep.message)
        return notes


@dataclass
class ValidationReport:
    ok: bool
    bound: float
    message: str


@dataclass
class SolverState:
    """Mutable per-solve state: current iterates and the running averages."""

    r: int
    x: np.ndarray
    lam: np.ndarray
    weight_sum: float = 0.0
    x_avg_accum: np.ndarray = None
    lambda_avg_accum: np.ndarray = None

    def __post_init__(self):
        if self.x_avg_accum is None:
            self.x_avg_accum = np.zeros_like(self.x)
        if self.lambda_avg_accum is None:
            self.lambda_avg_accum = np.zeros_like(self.lam)


@dataclass
class SolveResult:
    x_final: np.ndarray
    lambda_final: np.ndarray
    x_avg: np.ndarray
    lambda_avg: np.ndarray
    termination: str
    T_eps: Optional[int]
    trace: List[IterationRecord]
    iterates: Optional[List[Tuple[np.ndarray, np.ndarray]]] = None
    failure_message: str = ""


def schedule(cfg: GdpaConfig, r: int) -> Tuple[float, float, float]:
    """Step sizes (alpha_r, beta_r, gamma_r) at iteration r >= 1.

    beta is nondecreasing, alpha and gamma nonincreasing, and
    gamma_r == cfg.tau / beta_r by construction.
    """
    if r < 1:
        raise ValueError("iteration index starts at 1")
    cube = r ** (1.0 / 3.0)
    beta = cfg.beta0 * cube
    gamma = cfg.tau / beta
    alpha = cfg.alpha01 / (cfg.alpha02 + cfg.alpha03 * cube)
    return alpha, beta, gamma


def active_set(g_x: np.ndarray, lam: np.ndarray, beta_r: float, tau: float) -> np.ndarray:
    """Boolean mask of constraints with g_i(x) + (1-tau)*lam_i/beta > 0.

    The inequality is strict, so a constraint sitting exactly on the boundary
    with a zero multiplier stays inactive.
    """
    return g_x + (1.0 - tau) * lam / beta_r > 0.0


def _primal_step_raw(projection, x, lam, grad_fx, jac, gx, alpha_r, beta_r, tau, r=None):
    if lam.size:
        shifted = np.maximum((1.0 - tau) * lam + beta_r * gx, 0.0)
        direction = grad_fx + jac.T @ shifted
    else:
        direction = grad_fx
    x_next = _project_raw(projection, x - alpha_r * direction)
    if not np.all(np.isfinite(x_next)):
        raise NumericalFailure(f"primal step produced non-finite iterate at r={r}", r)
    return x_next


def primal_step(problem: ConstrainedProblem, x, lam,
                alpha_r: float, beta_r: float, tau: float) -> np.ndarray:
    """Projected gradient step on the merit function at fixed dual variable."""
    if not (alpha_r > 0 and beta_r > 0):
        raise ValueError("alpha_r and beta_r must be positive")
    xv = as_vector(x, "x")
    lv = as_vector(lam, "lambda")
    return _primal_step_raw(problem.projection, xv, lv, problem.grad_f(xv),
                            problem.jacobian(xv), problem.g(xv),
                            alpha_r, beta_r, tau)


def dual_step(g_next, lam, mask, beta_r: float, tau: float) -> np.ndarray:
    """Damped multiplier update on the active set; inactive entries reset to 0.

    ``g_next`` must be the constraint vector at the NEW primal point: the
    primal moves first, the dual reacts to the updated violation.
    """
    gv = as_vector(g_next, "g_next")
    lv = as_vector(lam, "lambda")
    m = np.asarray(mask, dtype=bool)
    if not (gv.size == lv.size == m.size):
        raise ValueError("g_next, lambda, and mask must have equal length")
    return np.where(m, np.maximum((1.0 - tau) * lv + beta_r * gv, 0.0), 0.0)


def validate_tau(cfg: GdpaConfig, constants: ProblemConstants) -> ValidationReport:
    """Check tau against the theoretical lower bound 1 - s/sqrt(66*U_J^2 + s^2).

    A violation is a warning, not an error: the bound needs the regularity
    constant, which is rarely known exactly, and small tau values often work
    well in practice.
    """
    sigma, u_j = constants.sigma, constants.U_J
    if sigma is None or u_j is None:
        return ValidationReport(True, float("nan"),
                                "tau bound skipped: sigma or U_J unknown")
    if math.isinf(sigma):
        bound = 0.0
    else:
        bound = 1.0 - sigma / math.sqrt(66.0 * u_j ** 2 + sigma ** 2)
    ok = cfg.tau > bound
    msg = (f"tau={cfg.tau} vs theoretical lower bound {bound:.6g}: "
           + ("ok" if ok else "below the bound (convergence guarantee void; warning only)"))
    return ValidationReport(ok, bound, msg)


def validate_alpha(cfg: GdpaConfig, constants: ProblemConstants,
                   lambda_norm: float, r: int) -> ValidationReport:
    """Check the descent condition 1/alpha_r >= L_f + (1-tau)|lam|L_J + beta_r*U_J*L_g."""
    needed = (constants.L_f, constants.L_J, constants.L_g, constants.U_J)
    if any(c is None for c in needed):
        return ValidationReport(True, float("nan"),
                                "alpha condition skipped: missing constants")
    alpha_r, beta_r, _ = schedule(cfg, r)
    required = (constants.L_f + (1.0 - cfg.tau) * lambda_norm * constants.L_J
                + beta_r * constants.U_J * constants.L_g)
    ok = 1.0 / alpha_r >= required
    msg = (f"1/alpha_{r}={1.0 / alpha_r:.6g} vs required {required:.6g}: "
           + ("ok" if ok else "descent condition violated (warning only)"))
    return ValidationReport(ok, required, msg)


def solve(
    problem: ConstrainedProblem,
    cfg: GdpaConfig,
    x0,
    lambda0=None,
    *,
    capture_iterates: bool = False,
    on_iteration: Optional[Callable] = None,
) -> SolveResult:
    """Run the solver from ``x0`` (projected into the feasible set first).

    The trace records metrics at the pre-update iterate of each recorded
    step, using that step's scheduled alpha/beta/gamma. Averages weight
    iterate r by 1/beta_r. The feasibility stopping time T_eps is the first r
    with squared positive violation of the new iterate at most ``eps_feas``;
    the run only terminates early once the stationarity norm also drops below
    ``eps_stat``. Numerical failures abort with the partial trace preserved.

    ``on_iteration(r, x_next, lam_prev, lam_next, mask, g_next)`` is invoked
    after every dual update; intended for diagnostics and invariant checks.
    """
    tau = cfg.tau
    m = problem.num_constraints
    x = project(problem.projection, as_vector(x0, "x0"))
    if lambda0 is None:
        lam = np.zeros(m)
    else:
        lam = as_vector(lambda0, "lambda0").copy()
        if lam.size != m:
            raise ValueError(f"lambda0 must have length {m}")
        if np.any(lam < 0):
            raise ValueError("lambda0 must be componentwise nonnegative")

    state = SolverState(r=0, x=x, lam=lam)
    trace: List[IterationRecord] = []
    iterates: Optional[List[Tuple[np.ndarray, np.ndarray]]] = [] if capture_iterates else None
    T_eps: Optional[int] = None
    termination = TERM_BUDGET
    failure_message = ""
    eps_feas = cfg.eps_feas
    eps_stat_sq = cfg.eps_stat ** 2
    record_every = cfg.record_every
    dense_until = cfg.dense_until
    max_iters = cfg.max_iters

    try:
        gx = problem.g(x)
    except NonFiniteError as exc:
        return SolveResult(x, lam, x.copy(), lam.copy(), TERM_NUMERICAL, None,
                           trace, iterates, f"initial evaluation: {exc}")

    eval_grad = problem.grad_f
    eval_jac = problem.jacobian
    eval_g = problem.g
    projection = problem.projection
    one_minus_tau = 1.0 - tau
    beta0 = cfg.beta0
    a01, a02, a03 = cfg.alpha01, cfg.alpha02, cfg.alpha03

    r = 0
    # overflow in a diverging run must surface as a checked numerical
    # failure, not a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for r in range(1, max_iters + 1):
            # keep bit-identical to schedule(cfg, r)
            cube = r ** (1.0 / 3.0)
            beta = beta0 * cube
            gamma = tau / beta
            alpha = a01 / (a02 + a03 * cube)
            try:
                grad = eval_grad(x)
                jac = eval_jac(x) if m else None

                state.weight_sum += 1.0 / beta
                state.x_avg_accum += x / beta
                state.lambda_avg_accum += lam / beta
                if capture_iterates:
                    iterates.append((x.copy(), lam.copy()))

                stopping = False
                if T_eps is not None:
                    gp = np.maximum(gx, 0.0)
                    if float(gp @ gp) <= eps_feas:
                        _, stat_sq = _stationarity_from_evals(
                            x, lam, gx, grad,
                            jac if jac is not None else np.zeros((0, x.size)),
                            alpha, beta, projection)
                        stopping = stat_sq <= eps_stat_sq

                if stopping or r <= dense_until or r % record_every == 0 or r == max_iters:
                    trace.append(make_record(problem, x, lam, gx, grad, jac,
                                             r, alpha, beta, gamma, tau))
                if stopping:
                    termination = TERM_FEASIBILITY
                    break

                if m:
                    mask = gx + one_minus_tau * lam / beta > 0.0
                    x_next = _primal_step_raw(projection, x, lam, grad, jac, gx,
                                              alpha, beta, tau, r)
                    g_next = eval_g(x_next)
                    lam_next = np.where(
                        mask, np.maximum(one_minus_tau * lam + beta * g_next, 0.0), 0.0)
                    if __debug__:
                        shrunk = mask & (g_next <= 0.0)
                        assert np.all(lam_next[shrunk]
                                      <= one_minus_tau * lam[shrunk] + 1e-15), \
                            f"dual contraction violated at r={r}"
                        assert np.all(lam_next[~mask] == 0.0), \
                            f"inactive multiplier not zeroed at r={r}"
                    if on_iteration is not None:
                        on_iteration(r, x_next, lam, lam_next, mask, g_next)
                    if T_eps is None:
                        gp = np.maximum(g_next, 0.0)
                        if float(gp @ gp) <= eps_feas:
                            T_eps = r
                    x, lam, gx = x_next, lam_next, g_next
                else:
                    x_next = _primal_step_raw(projection, x, lam, grad, None, gx,
                                              alpha, beta, tau, r)
                    if on_iteration is not None:
                        on_iteration(r, x_next, lam, lam, np.zeros(0, dtype=bool), gx)
                    if T_eps is None:
                        T_eps = r
                    x = x_next
            except (NumericalFailure, NonFiniteError) as exc:
                termination = TERM_NUMERICAL
                failure_message = f"iteration {r}: {exc}"
                break

    state.r = r
    state.x, state.lam = x, lam
    if state.weight_sum > 0:
        x_avg = state.x_avg_accum / state.weight_sum
        lam_avg = state.lambda_avg_accum / state.weight_sum
    else:
        x_avg, lam_avg = x.copy(), lam.copy()

    return SolveResult(
        x_final=x,
        lambda_final=lam,
        x_avg=x_avg,
        lambda_avg=lam_avg,
        termination=termination,
        T_eps=T_eps,
        trace=trace,
        iterates=iterates,
        failure_message=failure_message,
    )
