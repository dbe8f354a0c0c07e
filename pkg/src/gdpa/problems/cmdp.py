"""Tabular constrained MDP with an exactly-evaluated softmax policy.

The decision variable is a logit table theta in R^(S*A) parametrizing one
softmax distribution per state. Returns are computed exactly: the policy's
value function solves the (S x S) linear system (I - discount * P_pi) v =
r_pi, which is nonsingular for any discount < 1. Sign convention at the API
boundary: the underlying task is maximize-return subject to
return-at-least-threshold, negated here into min f(theta) subject to
g(theta) <= 0 with

    f(theta)   = -(1 - discount) * E_{s0~uniform}[ v_R(s0) ],
    g_i(theta) = thresholds[i] - (1 - discount) * E_{s0~uniform}[ v_{G_i}(s0) ].

Gradients use the exact policy-gradient formula with exact Q-values and the
softmax Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..problem import ConstrainedProblem
from ..vec import ProjectionSpec

_ROW_SUM_TOL = 1e-12


@dataclass
class TabularCmdp:
    """transitions[s, a, s'], rewards[s, a], constraint_rewards[i, s, a]."""

    transitions: np.ndarray
    rewards: np.ndarray
    constraint_rewards: np.ndarray
    discount: float
    thresholds: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.constraint_rewards = np.asarray(self.constraint_rewards, dtype=np.float64)
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64)
        s, a = self.rewards.shape
        if self.transitions.shape != (s, a, s):
            raise ValueError("transitions must have shape (S, A, S)")
        if self.constraint_rewards.ndim != 3 or self.constraint_rewards.shape[1:] != (s, a):
            raise ValueError("constraint_rewards must have shape (m, S, A)")
        if np.any(self.transitions < 0):
            raise ValueError("transition probabilities must be nonnegative")
        row_sums = self.transitions.sum(axis=2)
        if np.max(np.abs(row_sums - 1.0)) > _ROW_SUM_TOL:
            raise ValueError("each transitions[s, a, :] must sum to 1")
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie strictly between 0 and 1")
        if self.thresholds.shape != (self.constraint_rewards.shape[0],):
            raise ValueError("thresholds must have one entry per constraint reward")

    @property
    def num_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def num_actions(self) -> int:
        return self.rewards.shape[1]

    @property
    def num_constraints(self) -> int:
        return self.constraint_rewards.shape[0]


def random_cmdp(seed: int, num_states: int, num_actions: int, num_constraints: int,
                discount: float, thresholds=None) -> TabularCmdp:
    """Seeded instance with uniform-random transition kernels and rewards in [0, 1]."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(size=(num_states, num_actions, num_states))
    p /= p.sum(axis=2, keepdims=True)
    rewards = rng.uniform(size=(num_states, num_actions))
    constraint_rewards = rng.uniform(size=(num_constraints, num_states, num_actions))
    if thresholds is None:
        thresholds = np.zeros(num_constraints)
    return TabularCmdp(p, rewards, constraint_rewards, discount, thresholds)


def softmax_policy(theta: np.ndarray, num_states: int, num_actions: int) -> np.ndarray:
    """Row-stochastic (S, A) policy from the flat logit table."""
    z = theta.reshape(num_states, num_actions)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def policy_evaluation(model: TabularCmdp, policy: np.ndarray, table: np.ndarray):
    """Exact v, q, and the induced state kernel P_pi for a reward table (S, A)."""
    p_pi = np.einsum("sa,sat->st", policy, model.transitions)
    r_pi = (policy * table).sum(axis=1)
    v = np.linalg.solve(np.eye(model.num_states) - model.discount * p_pi, r_pi)
    q = table + model.discount * np.einsum("sat,t->sa", model.transitions, v)
    return v, q, p_pi


def _occupancy(model: TabularCmdp, p_pi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # Normalized discounted state-visitation measure; sums to one.
    eye = np.eye(model.num_states)
    return (1.0 - model.discount) * np.linalg.solve(eye - model.discount * p_pi.T, rho)


def _return_and_grad(model: TabularCmdp, theta: np.ndarray, table: np.ndarray,
                     rho: np.ndarray):
    policy = softmax_policy(theta, model.num_states, model.num_actions)
    v, q, p_pi = policy_evaluation(model, policy, table)
    value = (1.0 - model.discount) * float(rho @ v)
    d = _occupancy(model, p_pi, rho)
    advantage = q - v[:, None]
    grad = (d[:, None] * policy * advantage).ravel()
    return value, grad


def discounted_return(model: TabularCmdp, theta: np.ndarray, table: np.ndarray) -> float:
    """Normalized return (1 - discount) * E_{s0~uniform}[v(s0)] under ``table``."""
    rho = np.full(model.num_states, 1.0 / model.num_states)
    policy = softmax_policy(np.asarray(theta, dtype=np.float64),
                            model.num_states, model.num_actions)
    v, _, _ = policy_evaluation(model, policy, table)
    return (1.0 - model.discount) * float(rho @ v)


def optimal_return(model: TabularCmdp, table: np.ndarray,
                   tol: float = 1e-13, max_sweeps: int = 100_000) -> float:
    """Normalized optimal return for ``table`` by value iteration (oracle use)."""
    v = np.zeros(model.num_states)
    for _ in range(max_sweeps):
        q = table + model.discount * np.einsum("sat,t->sa", model.transitions, v)
        v_new = q.max(axis=1)
        if float(np.max(np.abs(v_new - v))) < tol:
            v = v_new
            break
        v = v_new
    rho = np.full(model.num_states, 1.0 / model.num_states)
    return (1.0 - model.discount) * float(rho @ v)


def build_cmdp(model: TabularCmdp) -> ConstrainedProblem:
    """Wrap the model as a smooth constrained problem over policy logits."""
    rho = np.full(model.num_states, 1.0 / model.num_states)
    dim = model.num_states * model.num_actions
    m = model.num_constraints
    thresholds = model.thresholds.copy()

    def eval_f(theta):
        value, _ = _return_and_grad(model, theta, model.rewards, rho)
        return -value

    def eval_grad_f(theta):
        _, grad = _return_and_grad(model, theta, model.rewards, rho)
        return -grad

    def eval_g(theta):
        out = np.empty(m)
        for i in range(m):
            value, _ = _return_and_grad(model, theta, model.constraint_rewards[i], rho)
            out[i] = thresholds[i] - value
        return out

    def eval_jacobian(theta):
        jac = np.empty((m, dim))
        for i in range(m):
            _, grad = _return_and_grad(model, theta, model.constraint_rewards[i], rho)
            jac[i] = -grad
        return jac

    return ConstrainedProblem(
        dim=dim,
        num_constraints=m,
        eval_f=eval_f,
        eval_grad_f=eval_grad_f,
        eval_g=eval_g,
        eval_jacobian=eval_jacobian,
        projection=ProjectionSpec.identity(),
        name="cmdp",
    )
