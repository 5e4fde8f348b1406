"""
Variational EM driver for the mesh-clustered GP mixture.

One iteration runs the E-step factors in the fixed order gamma -> mu ->
Sigma -> z, then the M-step, then evaluates the ELBO. The loop stops on a
relative ELBO change below `elbo_tol` or after `max_iter` iterations; the
latter is reported through `converged=False`, not raised.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from sklearn.cluster import KMeans

from config.settings import INIT_ASSIGNED_WEIGHT, KMEANS_N_INIT, MONOTONE_SLACK
from src.core.entities.cluster_hyper import ClusterHyper
from src.core.entities.priors import HyperPriors
from src.core.entities.variational_state import VariationalState
from src.core.exceptions import InvalidArgumentError, NumericalDegeneracyError
from src.core.fit_options import FitOptions
from src.gp.gp_core import ProfileObjective, default_bounds, initial_theta, tau_sq_closed_form
from src.gp.kernel import as_design
from src.mixture.elbo import elbo
from src.mixture.updates import (
    cluster_gp_terms, m_step, prior_state, update_gamma, update_mu, update_sigma, update_z,
)


@dataclass
class EMResult:
    state: VariationalState
    hypers: List[ClusterHyper]
    priors: HyperPriors
    elbo_trace: List[float] = field(default_factory=list)
    converged: bool = False
    monotone: bool = True

    @property
    def n_iter(self) -> int:
        return len(self.elbo_trace)


def check_training_data(B: np.ndarray, X: np.ndarray, S: np.ndarray):
    """Validates shapes (N, n), (n, p), (N, d) and finiteness; returns float arrays."""
    B = np.asarray(B, dtype=float)
    X = as_design(X)
    S = np.asarray(S, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    if B.ndim != 2 or B.shape[1] != X.shape[0]:
        raise InvalidArgumentError(f"solutions must be N x {X.shape[0]}, got {B.shape}")
    if S.shape[0] != B.shape[0]:
        raise InvalidArgumentError(f"{S.shape[0]} node coordinates for {B.shape[0]} solution rows")
    if not (np.all(np.isfinite(B)) and np.all(np.isfinite(S))):
        raise InvalidArgumentError("training data contains non-finite values")
    return B, X, S


def output_scales(B: np.ndarray) -> np.ndarray:
    """Root-mean-square of each node's outputs over the design, as an (N, 1) feature column."""
    B = np.asarray(B, dtype=float)
    return np.sqrt(np.mean(B ** 2, axis=1))[:, None]


def initial_responsibilities(features: np.ndarray, K: int, seed: int, occupied: Optional[int] = None,
                             assigned_weight: float = INIT_ASSIGNED_WEIGHT) -> np.ndarray:
    """
    Softened k-means assignment of the nodes into the first `occupied` clusters.

    Rows are sorted lexicographically before clustering so the start does
    not depend on node order; groups are relabelled by decreasing size.
    Each node puts `assigned_weight` on its group and spreads the rest over
    the other occupied clusters; clusters past the occupied ones start with
    zero responsibility. With N <= occupied node j (in sorted order) gets
    cluster j.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    N = features.shape[0]
    if K == 1:
        return np.ones((N, 1))
    occupied = K if occupied is None else min(K, occupied)
    order = np.lexsort(features.T[::-1])
    sorted_rows = features[order]
    if N <= occupied:
        used = N
        sorted_labels = np.arange(N)
    else:
        used = min(occupied, np.unique(sorted_rows, axis=0).shape[0])
        if used == 1:
            sorted_labels = np.zeros(N, dtype=int)
        else:
            km = KMeans(n_clusters=used, n_init=KMEANS_N_INIT, random_state=seed)
            raw = km.fit(sorted_rows).labels_
            counts = np.bincount(raw, minlength=used)
            mapping = np.empty(used, dtype=int)
            mapping[np.argsort(-counts, kind="stable")] = np.arange(used)
            sorted_labels = mapping[raw]
    labels = np.empty(N, dtype=int)
    labels[order] = sorted_labels
    R = np.zeros((N, K))
    if used == 1:
        R[:, 0] = 1.0
        return R
    R[:, :used] = (1.0 - assigned_weight) / (used - 1)
    R[np.arange(N), labels] = assigned_weight
    return R


def initial_hypers(B: np.ndarray, X: np.ndarray, K: int, options: FitOptions) -> List[ClusterHyper]:
    """
    Median-heuristic theta and the pooled closed-form scale, identical for all clusters.

    Theta is halved until it is admissible for the profile search, so every
    later M-step starts from a point it may keep.
    """
    low, high = default_bounds(X)
    theta = np.clip(initial_theta(X), low, high)
    objective = ProfileObjective(X, B, nugget=options.nugget)
    while not objective.admissible(theta) and np.any(theta > low):
        theta = np.maximum(theta / 2.0, low)
    tau_sq = max(tau_sq_closed_form(X, theta, B, None, options.nugget), options.tau_sq_floor)
    return [ClusterHyper(theta=theta.copy(), tau_sq=tau_sq) for _ in range(K)]


def run_variational_em(B: np.ndarray, X: np.ndarray, S: np.ndarray, priors: HyperPriors,
                       options: FitOptions) -> EMResult:
    """
    Fits the mixture by coordinate-ascent variational EM.

    Args:
        B: (N, n) node coefficients over the design
        X: (n, p) design
        S: (N, d) node coordinates
        priors: Fixed hyperpriors (K, alpha0, ...)
        options: Tolerances, optimizer budget, seed

    Returns:
        EMResult with the final factors, hyperparameters and ELBO trace
    """
    log = logging.getLogger("mcgp.fit")
    B, X, S = check_training_data(B, X, S)
    if S.shape[1] != priors.d:
        raise InvalidArgumentError(f"priors are {priors.d}-dimensional, nodes are {S.shape[1]}-dimensional")

    R0 = initial_responsibilities(output_scales(B), priors.K, options.seed, occupied=options.init_clusters)
    state = prior_state(R0, priors)
    hypers = initial_hypers(B, X, priors.K, options)
    gp = cluster_gp_terms(B, X, hypers, options.nugget)
    result = EMResult(state=state, hypers=hypers, priors=priors)
    log.info("Fitting mixture: N=%d n=%d K=%d", B.shape[0], X.shape[0], priors.K)

    for iteration in range(1, options.max_iter + 1):
        a, b = update_gamma(state.responsibilities, priors.alpha0)
        state = state.replace(beta_a=a, beta_b=b)
        means, precisions = update_mu(state, priors, S)
        state = state.replace(gauss_means=means, gauss_precisions=precisions)
        scales, dofs = update_sigma(state, priors, S)
        state = state.replace(wishart_scales=scales, wishart_dofs=dofs)
        R = update_z(state, S, B, X, hypers, options, gp)
        if not np.allclose(R.sum(axis=1), 1.0, rtol=0.0, atol=1e-10):
            raise NumericalDegeneracyError("responsibility rows do not sum to 1", term="E")
        state = state.replace(responsibilities=R)

        hypers = m_step(B, X, R, hypers, options)
        gp = cluster_gp_terms(B, X, hypers, options.nugget)
        value = elbo(state, priors, B, X, S, hypers, options, gp)

        trace = result.elbo_trace
        if trace:
            previous = trace[-1]
            if value < previous - MONOTONE_SLACK * max(abs(previous), 1.0):
                result.monotone = False
                log.warning("ELBO decreased at iteration %d: %.10g -> %.10g", iteration, previous, value)
            change = abs(value - previous) / max(abs(value), 1.0)
        else:
            change = np.inf
        trace.append(value)
        log.debug("iteration %d: ELBO=%.10g change=%.3e", iteration, value, change)
        if change < options.elbo_tol:
            result.converged = True
            break

    result.state, result.hypers = state, hypers
    if result.converged:
        log.info("Converged after %d iterations (ELBO=%.6g)", result.n_iter, result.elbo_trace[-1])
    else:
        log.warning("No convergence after %d iterations", options.max_iter)
    return result
