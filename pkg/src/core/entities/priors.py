from dataclasses import dataclass

import numpy as np

from src.core.exceptions import InvalidArgumentError


@dataclass(frozen=True)
class HyperPriors:
    """
    Fixed hyperparameters of the stick-breaking mixture over mesh nodes.

    Sigma0 is a precision matrix (prior on the cluster centres) and W0 the
    Wishart scale of the cluster precisions.
    """
    alpha0: float
    mu0: np.ndarray
    Sigma0: np.ndarray
    W0: np.ndarray
    kappa0: float
    K: int
    regularized: bool = False    # Sample covariance was singular and got jittered

    def __post_init__(self):
        d = self.mu0.shape[0]
        if self.alpha0 <= 0.0:
            raise InvalidArgumentError(f"alpha0 must be positive, got {self.alpha0}")
        if self.K < 1:
            raise InvalidArgumentError(f"K must be at least 1, got {self.K}")
        if self.kappa0 < d:
            raise InvalidArgumentError(f"kappa0 must be >= d={d}, got {self.kappa0}")
        for name in ("Sigma0", "W0"):
            M = getattr(self, name)
            if M.shape != (d, d) or not np.allclose(M, M.T) or np.any(np.linalg.eigvalsh(M) <= 0.0):
                raise InvalidArgumentError(f"{name} must be a {d}x{d} SPD matrix")

    @property
    def d(self) -> int:
        return self.mu0.shape[0]

