"""
Evidence lower bound of the stick-breaking GP mixture.

ELBO = A + B + C + D + E where
    A  expected log joint: b | z, s | z, mu, Sigma, z | gamma and the priors
       on gamma, mu and Sigma
    B  entropy of the Beta stick factors
    C  entropy of the Gaussian centre factors
    D  entropy of the Wishart precision factors
    E  entropy of the responsibilities
The node-output part of A always uses the exact n-dimensional Gaussian
log-density, whatever the E-step exponent setting.
"""
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.special import betaln, digamma, entr, multigammaln

from src.core.entities.cluster_hyper import ClusterHyper
from src.core.entities.priors import HyperPriors
from src.core.entities.variational_state import VariationalState
from src.core.exceptions import NumericalDegeneracyError
from src.core.fit_options import FitOptions
from src.mixture.updates import (
    ClusterGpTerms, cluster_gp_terms, expected_log_det, expected_log_sticks,
    expected_log_weights, multi_digamma, node_location_terms, node_output_terms,
    spd_inverse, spd_logdet,
)

_LOG_2PI = np.log(2.0 * np.pi)


def _weighted_sum(R: np.ndarray, terms: np.ndarray) -> float:
    """sum_jk q_jk * terms_jk with 0 * anything = 0."""
    with np.errstate(invalid="ignore"):
        return float(np.sum(np.where(R > 0.0, R * terms, 0.0)))


def expected_log_joint(state: VariationalState, priors: HyperPriors, S: np.ndarray,
                       gp: ClusterGpTerms, hypers: Sequence[ClusterHyper], n: int) -> float:
    d, K = priors.d, state.K
    R = state.responsibilities
    elog_det = expected_log_det(state.wishart_scales, state.wishart_dofs)

    outputs = 0.5 * _weighted_sum(R, node_output_terms(gp, hypers, n, literal_tau_exponent=False))
    locations = 0.5 * _weighted_sum(R, node_location_terms(S, state))
    labels = _weighted_sum(R, np.broadcast_to(expected_log_weights(state.beta_a, state.beta_b), R.shape))

    _, elog_1mg = expected_log_sticks(state.beta_a, state.beta_b)
    sticks = float(np.sum(np.log(priors.alpha0) + (priors.alpha0 - 1.0) * elog_1mg))

    centres = 0.0
    logdet_sigma0 = spd_logdet(priors.Sigma0)
    for k in range(K):
        diff = state.gauss_means[k] - priors.mu0
        cov = spd_inverse(state.gauss_precisions[k])
        centres += 0.5 * (logdet_sigma0 - d * _LOG_2PI - diff @ priors.Sigma0 @ diff
                          - np.trace(priors.Sigma0 @ cov))

    W0_inv = spd_inverse(priors.W0)
    log_norm = -0.5 * priors.kappa0 * spd_logdet(priors.W0) \
        - 0.5 * priors.kappa0 * d * np.log(2.0) - multigammaln(0.5 * priors.kappa0, d)
    precisions = 0.0
    for k in range(K):
        precisions += log_norm + 0.5 * (priors.kappa0 - d - 1.0) * elog_det[k] \
            - 0.5 * state.wishart_dofs[k] * np.trace(W0_inv @ state.wishart_scales[k])

    return outputs + locations + labels + sticks + centres + precisions


def beta_entropy(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(betaln(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
                        + (a + b - 2.0) * digamma(a + b)))


def gaussian_entropy(precisions: np.ndarray) -> float:
    d = precisions.shape[1]
    return float(sum(0.5 * (d * _LOG_2PI + d - spd_logdet(P)) for P in precisions))


def wishart_entropy(scales: np.ndarray, dofs: np.ndarray) -> float:
    d = scales.shape[1]
    total = 0.0
    for W, kappa in zip(scales, dofs):
        total += 0.5 * (d + 1.0) * spd_logdet(W) + 0.5 * d * (d + 1.0) * np.log(2.0) \
            + multigammaln(0.5 * kappa, d) - 0.5 * (kappa - d - 1.0) * multi_digamma(0.5 * kappa, d) \
            + 0.5 * kappa * d
    return float(total)


def elbo_terms(state: VariationalState, priors: HyperPriors, B: np.ndarray, X: np.ndarray,
               S: np.ndarray, hypers: Sequence[ClusterHyper], options: Optional[FitOptions] = None,
               gp: Optional[ClusterGpTerms] = None) -> Dict[str, float]:
    """
    The five ELBO terms keyed "A".."E".

    Raises:
        NumericalDegeneracyError: If a term is not finite; `term` names it.
    """
    options = options or FitOptions()
    gp = gp if gp is not None else cluster_gp_terms(B, X, hypers, options.nugget)
    terms = {
        "A": expected_log_joint(state, priors, S, gp, hypers, X.shape[0]),
        "B": beta_entropy(state.beta_a, state.beta_b),
        "C": gaussian_entropy(state.gauss_precisions),
        "D": wishart_entropy(state.wishart_scales, state.wishart_dofs),
        "E": float(np.sum(entr(state.responsibilities))),
    }
    for name, value in terms.items():
        if not np.isfinite(value):
            raise NumericalDegeneracyError(f"ELBO term {name} is not finite ({value})", term=name)
    return terms


def elbo(state: VariationalState, priors: HyperPriors, B: np.ndarray, X: np.ndarray,
         S: np.ndarray, hypers: Sequence[ClusterHyper], options: Optional[FitOptions] = None,
         gp: Optional[ClusterGpTerms] = None) -> float:
    """Sum of the five ELBO terms."""
    return float(sum(elbo_terms(state, priors, B, X, S, hypers, options, gp).values()))
