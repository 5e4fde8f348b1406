"""
Coordinate-ascent updates of the truncated stick-breaking GP mixture.

Node j carries a location s_j (d-dim) and a coefficient vector b_j over the
design. Given z_j = k:
    s_j ~ N(mu_k, Sigma_k^{-1}),   b_j ~ N(0, tau_k^2 Phi_{theta_k}),
with mu_k ~ N(mu0, Sigma0^{-1}), Sigma_k ~ Wishart(W0, kappa0) and stick
fractions gamma_k ~ Beta(1, alpha0) for k < K, gamma_K = 1.

E-step order is gamma -> mu -> Sigma -> z; the M-step refits (theta_k, tau_k^2).
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import digamma, logsumexp

from config.settings import COVARIANCE_JITTER
from src.core.entities.cluster_hyper import ClusterHyper
from src.core.entities.priors import HyperPriors
from src.core.entities.variational_state import VariationalState
from src.core.exceptions import InvalidArgumentError
from src.core.fit_options import FitOptions
from src.gp.gp_core import ProfileObjective, default_bounds, minimize_profile
from src.gp.kernel import corr_matrix, factorize
from src.utils.concurrency import parallel_map

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2.0 * np.pi)


def spd_inverse(M: np.ndarray) -> np.ndarray:
    """Inverse of an SPD matrix via Cholesky, symmetrized."""
    inv = cho_solve(cho_factor(M, lower=True), np.eye(M.shape[0]))
    return 0.5 * (inv + inv.T)


def spd_logdet(M: np.ndarray) -> float:
    c, _ = cho_factor(M, lower=True)
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def default_priors(S: np.ndarray, d: Optional[int] = None, alpha0: float = 0.5, K: int = 10,
                   kappa0: Optional[float] = None) -> HyperPriors:
    """
    Data-driven hyperpriors from the node coordinates.

    mu0 is the node mean, Sigma0 the inverse sample covariance, kappa0 = d
    and W0 = Sigma0 / d. A singular covariance gets 1e-8*trace/d on its
    diagonal before inversion and the result is flagged `regularized`.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    d = S.shape[1] if d is None else d
    if S.shape[1] != d:
        raise InvalidArgumentError(f"node coordinates have dimension {S.shape[1]}, expected {d}")
    if not np.all(np.isfinite(S)):
        raise InvalidArgumentError("node coordinates contain non-finite values")

    mu0 = S.mean(axis=0)
    cov = np.atleast_2d(np.cov(S, rowvar=False)) if S.shape[0] > 1 else np.zeros((d, d))
    eig = np.linalg.eigvalsh(cov)
    regularized = bool(eig[0] <= 1e-12 * max(eig[-1], 0.0) or eig[-1] <= 0.0)
    if regularized:
        jitter = COVARIANCE_JITTER * np.trace(cov) / d
        if jitter <= 0.0:
            jitter = COVARIANCE_JITTER
        logger.warning("Singular node covariance; adding %.3e to the diagonal", jitter)
        cov = cov + jitter * np.eye(d)
    Sigma0 = spd_inverse(cov)
    kappa0 = float(d) if kappa0 is None else float(kappa0)
    return HyperPriors(alpha0=float(alpha0), mu0=mu0, Sigma0=Sigma0, W0=Sigma0 / d,
                       kappa0=kappa0, K=int(K), regularized=regularized)


def prior_state(responsibilities: np.ndarray, priors: HyperPriors) -> VariationalState:
    """State whose mu/Sigma factors equal their priors, with the given responsibilities."""
    K, d = responsibilities.shape[1], priors.d
    a, b = update_gamma(responsibilities, priors.alpha0)
    return VariationalState(
        beta_a=a, beta_b=b,
        gauss_means=np.tile(priors.mu0, (K, 1)),
        gauss_precisions=np.tile(priors.Sigma0, (K, 1, 1)),
        wishart_scales=np.tile(priors.W0, (K, 1, 1)),
        wishart_dofs=np.full(K, priors.kappa0),
        responsibilities=responsibilities,
    )


def update_gamma(responsibilities: np.ndarray, alpha0: float):
    """
    Beta factors of the stick fractions.

    a_k = sum_j q_jk + 1 and b_k = sum_j q(z_j > k) + alpha0, for k = 1..K-1.

    Returns:
        Tuple of (a, b), each of shape (K-1,)
    """
    counts = responsibilities.sum(axis=0)
    tail = np.cumsum(counts[::-1])[::-1]     # tail[k] = sum_{k' >= k} counts[k']
    a = counts[:-1] + 1.0
    b = tail[1:] + alpha0
    return a, b


def update_mu(state: VariationalState, priors: HyperPriors, S: np.ndarray):
    """
    Gaussian factors of the cluster centres.

    precision_k = Sigma0 + N_k kappa_k W_k,
    mean_k = precision_k^{-1} (Sigma0 mu0 + kappa_k W_k sum_j q_jk s_j).
    Empty clusters get the prior back exactly.
    """
    R = state.responsibilities
    Nk = R.sum(axis=0)
    weighted_sums = R.T @ S
    means = np.empty((state.K, priors.d))
    precisions = np.empty((state.K, priors.d, priors.d))
    prior_term = priors.Sigma0 @ priors.mu0
    for k in range(state.K):
        if Nk[k] == 0.0:
            means[k] = priors.mu0
            precisions[k] = priors.Sigma0
            continue
        EW = state.wishart_dofs[k] * state.wishart_scales[k]
        P = priors.Sigma0 + Nk[k] * EW
        P = 0.5 * (P + P.T)
        means[k] = cho_solve(cho_factor(P, lower=True), prior_term + EW @ weighted_sums[k])
        precisions[k] = P
    return means, precisions


def update_sigma(state: VariationalState, priors: HyperPriors, S: np.ndarray):
    """
    Wishart factors of the cluster precisions.

    kappa_k = kappa0 + N_k and
    W_k^{-1} = W0^{-1} + sum_j q_jk [(s_j - m_k)(s_j - m_k)^T + Cov(mu_k)].
    Empty clusters get the prior back exactly.
    """
    R = state.responsibilities
    Nk = R.sum(axis=0)
    W0_inv = spd_inverse(priors.W0)
    scales = np.empty((state.K, priors.d, priors.d))
    for k in range(state.K):
        if Nk[k] == 0.0:
            scales[k] = priors.W0
            continue
        diff = S - state.gauss_means[k]
        scatter = (diff.T * R[:, k]) @ diff
        W_inv = W0_inv + scatter + Nk[k] * spd_inverse(state.gauss_precisions[k])
        scales[k] = spd_inverse(0.5 * (W_inv + W_inv.T))
    return scales, priors.kappa0 + Nk


def expected_log_sticks(a: np.ndarray, b: np.ndarray):
    """E[log gamma_k] and E[log(1 - gamma_k)] for k < K."""
    total = digamma(a + b)
    return digamma(a) - total, digamma(b) - total


def expected_log_weights(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """E[log pi_k] = E[log gamma_k] + sum_{i<k} E[log(1 - gamma_i)], with log gamma_K = 0."""
    elog_g, elog_1mg = expected_log_sticks(a, b)
    out = np.zeros(a.shape[0] + 1)
    out[:-1] = elog_g
    out[1:] += np.cumsum(elog_1mg)
    return out


def multi_digamma(x: np.ndarray, d: int) -> np.ndarray:
    """psi_d(x) = sum_{i=1..d} psi(x + (1 - i)/2)."""
    x = np.asarray(x, dtype=float)
    return sum(digamma(x + (1.0 - i) / 2.0) for i in range(1, d + 1))


def expected_log_det(scales: np.ndarray, dofs: np.ndarray) -> np.ndarray:
    """E[log|Sigma_k|] = psi_d(kappa_k/2) + d log 2 + log|W_k|."""
    d = scales.shape[1]
    logdets = np.array([spd_logdet(W) for W in scales])
    return multi_digamma(dofs / 2.0, d) + d * np.log(2.0) + logdets


def expected_node_quadratic(S: np.ndarray, state: VariationalState) -> np.ndarray:
    """(N, K) E[(s_j - mu_k)^T Sigma_k (s_j - mu_k)] = kappa_k[(s-m)^T W (s-m) + tr(W Cov(mu_k))]."""
    out = np.empty((S.shape[0], state.K))
    for k in range(state.K):
        diff = S - state.gauss_means[k]
        W = state.wishart_scales[k]
        maha = np.einsum("ij,jk,ik->i", diff, W, diff)
        trace = np.trace(W @ spd_inverse(state.gauss_precisions[k]))
        out[:, k] = state.wishart_dofs[k] * (maha + trace)
    return out


def node_location_terms(S: np.ndarray, state: VariationalState) -> np.ndarray:
    """(N, K) s_jk = E[log|Sigma_k|] - d log 2pi - E[quadratic]; E[log N(s_j)] = s_jk / 2."""
    d = state.d
    return expected_log_det(state.wishart_scales, state.wishart_dofs)[None, :] \
        - d * _LOG_2PI - expected_node_quadratic(S, state)


@dataclass(frozen=True)
class ClusterGpTerms:
    """log|Phi_k| and b_j^T Phi_k^{-1} b_j for every cluster, at the current lengthscales."""
    log_dets: np.ndarray    # (K,)
    quads: np.ndarray       # (N, K)


def cluster_gp_terms(B: np.ndarray, X: np.ndarray, hypers: Sequence[ClusterHyper],
                     nugget: float) -> ClusterGpTerms:
    """Factorizes Phi_k once per cluster; clusters are processed independently."""
    def one(hyper: ClusterHyper):
        fac = factorize(corr_matrix(X, hyper.theta, nugget), nugget)
        return fac.log_det, fac.quadratic_form(B.T)

    results = parallel_map(one, hypers)
    log_dets = np.array([r[0] for r in results])
    quads = np.column_stack([r[1] for r in results])
    return ClusterGpTerms(log_dets=log_dets, quads=quads)


def node_output_terms(gp: ClusterGpTerms, hypers: Sequence[ClusterHyper], n: int,
                      literal_tau_exponent: bool = False) -> np.ndarray:
    """
    (N, K) t_jk = -n log 2pi - n log tau_k^2 - log|Phi_k| - b_j^T Phi_k^{-1} b_j / tau_k^2.

    With literal_tau_exponent the scale enters as -log tau_k^2 instead.
    """
    tau_sq = np.array([h.tau_sq for h in hypers])
    exponent = 1.0 if literal_tau_exponent else float(n)
    with np.errstate(over="ignore"):
        t = -n * _LOG_2PI - exponent * np.log(tau_sq)[None, :] - gp.log_dets[None, :] \
            - gp.quads / tau_sq[None, :]
    return t


def update_z(state: VariationalState, S: np.ndarray, B: np.ndarray, X: np.ndarray,
             hypers: Sequence[ClusterHyper], options: FitOptions,
             gp: Optional[ClusterGpTerms] = None) -> np.ndarray:
    """
    Responsibilities q(z_j = k) from the current factors and hyperparameters.

    log r_jk = E[log pi_k] + (s_jk + t_jk)/2, normalized per row with
    log-sum-exp. Rows are independent given the cluster parameters.

    Returns:
        (N, K) row-stochastic matrix
    """
    gp = gp if gp is not None else cluster_gp_terms(B, X, hypers, options.nugget)
    log_r = expected_log_weights(state.beta_a, state.beta_b)[None, :] \
        + 0.5 * node_location_terms(S, state) \
        + 0.5 * node_output_terms(gp, hypers, X.shape[0], options.literal_tau_exponent)
    norm = logsumexp(log_r, axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        R = np.exp(log_r - norm)
    bad = ~np.isfinite(norm[:, 0]) | ~np.all(np.isfinite(R), axis=1)
    if np.any(bad):
        logger.warning("%d responsibility rows underflowed; using uniform rows", int(bad.sum()))
        R[bad] = 1.0 / state.K
    R /= R.sum(axis=1, keepdims=True)
    return R


def m_step(B: np.ndarray, X: np.ndarray, responsibilities: np.ndarray,
           prev_hypers: Sequence[ClusterHyper], options: FitOptions) -> List[ClusterHyper]:
    """
    Refits (theta_k, tau_k^2) for every cluster with enough mass.

    Clusters below eps_active keep their hyperparameters and are marked
    inactive. Clusters whose weighted outputs are all zero keep theta and
    get tau_k^2 = tau_sq_floor with the degenerate flag. The others run the
    multistart search seeded at the previous theta (seed + k) and take the
    closed-form scale.
    """
    low, high = default_bounds(X)
    log = logging.getLogger("mcgp.mstep")

    def one(k: int) -> ClusterHyper:
        prev = prev_hypers[k]
        weights = responsibilities[:, k]
        if weights.sum() < options.eps_active:
            return prev.replace(active=False)
        objective = ProfileObjective(X, B, weights, options.nugget)
        if objective.zero_energy:
            return ClusterHyper(theta=prev.theta, tau_sq=options.tau_sq_floor, active=True, degenerate=True)
        theta = minimize_profile(
            objective, init=np.clip(prev.theta, low, high), bounds=(low, high),
            seed=options.seed + k, multistarts=options.multistarts, max_evals=options.max_evals,
        )
        tau_sq = max(objective.tau_sq(theta), options.tau_sq_floor)
        log.debug("cluster %d: mass=%.4g theta=%s tau_sq=%.4g", k, weights.sum(), theta, tau_sq)
        return ClusterHyper(theta=theta, tau_sq=tau_sq, active=True, degenerate=False)

    return parallel_map(one, range(len(prev_hypers)))
