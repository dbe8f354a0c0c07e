import numpy as np
import pytest

from gdpa import ConstrainedProblem, ProjectionSpec


def make_unconstrained(center):
    """f(x) = 0.5*||x - center||^2 with no constraints."""
    c = np.asarray(center, dtype=float)
    return ConstrainedProblem(
        dim=c.size,
        num_constraints=0,
        eval_f=lambda x: 0.5 * float((x - c) @ (x - c)),
        eval_grad_f=lambda x: x - c,
        name="unconstrained-quadratic",
    )


def random_quadratic_problem(seed, d=4, m=3, box_radius=2.0):
    """Convex quadratic objective, random (indefinite) quadratic constraints,
    box feasible set. Used for the dual-update property suites."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    hess = a.T @ a + np.eye(d)
    lin = rng.standard_normal(d)
    quads = np.empty((m, d, d))
    for i in range(m):
        b = rng.standard_normal((d, d))
        quads[i] = 0.5 * (b + b.T)
    slopes = rng.standard_normal((m, d))
    offsets = rng.uniform(-1.0, 1.0, m)

    def eval_f(x):
        return 0.5 * float(x @ hess @ x) + float(lin @ x)

    def eval_grad_f(x):
        return hess @ x + lin

    def eval_g(x):
        return np.array([0.5 * float(x @ quads[i] @ x) + float(slopes[i] @ x) + offsets[i]
                         for i in range(m)])

    def eval_jacobian(x):
        return np.vstack([quads[i] @ x + slopes[i] for i in range(m)])

    return ConstrainedProblem(
        dim=d, num_constraints=m,
        eval_f=eval_f, eval_grad_f=eval_grad_f,
        eval_g=eval_g, eval_jacobian=eval_jacobian,
        projection=ProjectionSpec.box(-box_radius * np.ones(d), box_radius * np.ones(d)),
        name=f"random-qq-{seed}",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
