from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class VariationalState:
    """
    Parameters of every mean-field factor.

    Attributes:
        beta_a, beta_b: (K-1,) Beta parameters of the stick fractions; the
            K-th stick is fixed at 1 (truncation)
        gauss_means: (K, d) means of q(mu_k)
        gauss_precisions: (K, d, d) precisions of q(mu_k)
        wishart_scales: (K, d, d) scales W_k of q(Sigma_k)
        wishart_dofs: (K,) degrees of freedom kappa_k
        responsibilities: (N, K) row-stochastic q(z_j = k)
    """
    beta_a: np.ndarray
    beta_b: np.ndarray
    gauss_means: np.ndarray
    gauss_precisions: np.ndarray
    wishart_scales: np.ndarray
    wishart_dofs: np.ndarray
    responsibilities: np.ndarray

    @property
    def K(self) -> int:
        return self.responsibilities.shape[1]

    @property
    def d(self) -> int:
        return self.gauss_means.shape[1]

    def replace(self, **changes) -> "VariationalState":
        return replace(self, **changes)
