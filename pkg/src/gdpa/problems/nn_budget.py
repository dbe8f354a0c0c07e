"""Two-layer network training with accuracy budgets on secondary classes.

Fixed architecture: input -> sigmoid hidden layer -> sigmoid output layer, no
biases, mean squared error against one-hot targets. The objective is the loss
on the prioritized class split; every other class split contributes one
budget constraint. Gradients are hand-coded backpropagation for this exact
architecture.
"""

from __future__ import annotations

import numpy as np

from ..problem import ConstrainedProblem
from ..vec import ProjectionSpec, as_vector
from .datasets import MnpcDataset


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _split_weights(x: np.ndarray, d_in: int, hidden: int, num_out: int):
    w1 = x[: d_in * hidden].reshape(d_in, hidden)
    w2 = x[d_in * hidden:].reshape(hidden, num_out)
    return w1, w2


def _forward(w1, w2, samples):
    h = _sigmoid(samples @ w1)
    o = _sigmoid(h @ w2)
    return h, o


def _loss(w1, w2, samples, target):
    _, o = _forward(w1, w2, samples)
    diff = o - target
    return float((diff * diff).mean())


def _loss_grad(w1, w2, samples, target):
    n, k = target.shape
    h, o = _forward(w1, w2, samples)
    diff = o - target
    d_o = (2.0 / (n * k)) * diff
    d_z2 = d_o * o * (1.0 - o)
    g_w2 = h.T @ d_z2
    d_h = d_z2 @ w2.T
    d_z1 = d_h * h * (1.0 - h)
    g_w1 = samples.T @ d_z1
    return np.concatenate([g_w1.ravel(), g_w2.ravel()])


def build_nn_budget(data: MnpcDataset, hidden: int, budgets) -> ConstrainedProblem:
    """Decision variable: flattened (d_in x hidden) + (hidden x num_classes)
    weights. f = MSE loss on class 0; g_i = loss on class i - budgets[i-1]."""
    if hidden < 1:
        raise ValueError("hidden must be positive")
    b = as_vector(budgets, "budgets")
    m = data.num_classes - 1
    if b.size != m:
        raise ValueError(f"budgets must have length {m}")
    splits, targets = [], []
    for cls in range(data.num_classes):
        block = data.class_features(cls)
        if block.shape[0] == 0:
            raise ValueError(f"class {cls} has no samples")
        onehot = np.zeros((block.shape[0], data.num_classes))
        onehot[:, cls] = 1.0
        splits.append(block)
        targets.append(onehot)
    d_in, num_out = data.d_in, data.num_classes
    dim = d_in * hidden + hidden * num_out

    def eval_f(x):
        w1, w2 = _split_weights(x, d_in, hidden, num_out)
        return _loss(w1, w2, splits[0], targets[0])

    def eval_grad_f(x):
        w1, w2 = _split_weights(x, d_in, hidden, num_out)
        return _loss_grad(w1, w2, splits[0], targets[0])

    def eval_g(x):
        w1, w2 = _split_weights(x, d_in, hidden, num_out)
        return np.array([
            _loss(w1, w2, splits[i], targets[i]) - b[i - 1]
            for i in range(1, data.num_classes)
        ])

    def eval_jacobian(x):
        w1, w2 = _split_weights(x, d_in, hidden, num_out)
        return np.vstack([
            _loss_grad(w1, w2, splits[i], targets[i])
            for i in range(1, data.num_classes)
        ])

    return ConstrainedProblem(
        dim=dim,
        num_constraints=m,
        eval_f=eval_f,
        eval_grad_f=eval_grad_f,
        eval_g=eval_g,
        eval_jacobian=eval_jacobian,
        projection=ProjectionSpec.identity(),
        name="nn-budget",
    )
