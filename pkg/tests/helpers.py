"""
Test Helpers - Shared fixtures and utilities for tests.

Provides factory functions for small designs, synthetic node coefficients,
fast fitting configs and tiny FEM datasets.
"""
from typing import Callable, Optional, Tuple

import numpy as np

from src.core.config_types import FitConfig
from src.fem.dataset import PoissonDataset, generate_dataset, training_inputs
from src.gp.kernel import corr_matrix


def fast_config(K: int = 3, max_iter: int = 15, seed: int = 0, **extra) -> FitConfig:
    """
    FitConfig with a small optimizer budget, for quick fits in tests.

    Args:
        K: Truncation level
        max_iter: EM iteration cap
        seed: Fitting seed
        **extra: Additional top-level FitConfig keys

    Returns:
        FitConfig dict
    """
    config: FitConfig = {
        "seed": seed,
        "max_iter": max_iter,
        "elbo_tol": 1e-6,
        "optimizer": {"multistarts": 2, "max_evals": 60},
        "priors": {"K": K},
    }
    config.update(extra)
    return config


def grid_nodes(side: int = 6) -> np.ndarray:
    """(side^2, 2) lattice of node coordinates on the unit square."""
    t = np.linspace(0.0, 1.0, side)
    s1, s2 = np.meshgrid(t, t)
    return np.column_stack([s1.ravel(), s2.ravel()])


def smooth_coefficients(S: np.ndarray, X: np.ndarray) -> np.ndarray:
    """
    (N, n) smooth node coefficients b_j(x) = sin(pi s1) sin(pi s2) exp(x s1).

    Same family as the Poisson solution, so it is zero on the boundary.
    """
    x = np.asarray(X, dtype=float)[:, 0]
    base = np.sin(np.pi * S[:, 0]) * np.sin(np.pi * S[:, 1])
    return base[:, None] * np.exp(S[:, 0:1] * x[None, :])


def two_regime_coefficients(S: np.ndarray, X: np.ndarray) -> np.ndarray:
    """
    Nodes with s1 < 0.5 vary slowly in x, the others oscillate quickly.

    Gives the mixture two clearly different lengthscales to find.
    """
    x = np.asarray(X, dtype=float)[:, 0]
    slow = 0.5 * x[None, :] + 0.1 * S[:, 1:2]
    fast = np.sin(4.0 * np.pi * x[None, :]) * (1.0 + S[:, 1:2])
    return np.where(S[:, 0:1] < 0.5, slow, fast)


def gp_draws(X: np.ndarray, theta: float, count: int, seed: int = 0, tau: float = 1.0) -> np.ndarray:
    """(count, n) seeded draws from a zero-mean Matern-5/2 GP on the design."""
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(corr_matrix(X, [theta], nugget=1e-10))
    return tau * (L @ rng.standard_normal((X.shape[0], count))).T


def small_problem(side: int = 6, n: int = 5) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(B, X, S) on a side x side node lattice with the midpoint design."""
    X = training_inputs(n)
    S = grid_nodes(side)
    return smooth_coefficients(S, X), X, S


def rough_problem(side: int = 5, n: int = 6, seed: int = 0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (B, X, S) whose input dependence is two short-lengthscale GP draws.

    b_j(x) = sin(pi s1) sin(pi s2) g1(x) + s1 g2(x); the fitted lengthscales
    stay well inside their bounds, so the kriging systems are well conditioned.
    """
    X = training_inputs(n)
    S = grid_nodes(side)
    g = gp_draws(X, 0.3, count=2, seed=seed)
    base = np.sin(np.pi * S[:, 0]) * np.sin(np.pi * S[:, 1])
    return np.outer(base, g[0]) + np.outer(S[:, 0], g[1]), X, S


class NodeFunctionModel:
    """
    Test double for a fitted emulator: node j predicts fn(s_j, x) exactly.

    Satisfies the NodeMomentSource protocol with a constant node variance.
    """

    model_type = "node-function"

    def __init__(self, nodes: np.ndarray, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 variance: float = 0.0):
        self.nodes = np.asarray(nodes, dtype=float)
        self.fn = fn
        self.variance = variance
        self.converged = True

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def node_moments(self, X_new: np.ndarray, node_idx: Optional[np.ndarray] = None):
        x = np.asarray(X_new, dtype=float).reshape(-1, 1)
        if node_idx is None:
            node_idx = np.arange(self.n_nodes)
        node_idx = np.asarray(node_idx)
        s = self.nodes[node_idx]
        if node_idx.ndim == 1:
            s = np.broadcast_to(s, (x.shape[0],) + s.shape)
        means = self.fn(s, x)
        return means, np.full(means.shape, self.variance)


def small_dataset(h: float = 0.5, n: int = 5, inputs: Optional[np.ndarray] = None) -> PoissonDataset:
    """FEM dataset on a coarse mesh (h = 0.5 gives 25 nodes)."""
    xs = training_inputs(n)[:, 0] if inputs is None else np.asarray(inputs, dtype=float).ravel()
    return generate_dataset(h, xs)


def assert_interpolates(test, model, B: np.ndarray, X: np.ndarray, rtol: float = 1e-5) -> None:
    """Every node's prediction at the design is within rtol * ||b_j|| of its training values."""
    means, _ = model.predict_all_nodes(X)
    errors = np.abs(means - np.asarray(B).T).max(axis=0)
    bounds = rtol * np.linalg.norm(B, axis=1)
    worst = int(np.argmax(errors - bounds))
    test.assertTrue(np.all(errors <= bounds),
                    msg=f"node {worst}: error {errors[worst]:.3e} > {bounds[worst]:.3e}")


def assert_training_variance_bounded(test, model, X: np.ndarray, factor: float = 10.0) -> None:
    """mcGP variance at the design is at most factor * max_k tau_k^2 * nugget."""
    _, variances = model.predict_all_nodes(X)
    bound = factor * max(h.tau_sq for h in model.hypers) * model.nugget
    test.assertLessEqual(float(variances.max()), bound)
