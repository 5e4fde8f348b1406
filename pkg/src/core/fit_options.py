"""
Resolved fitting options: a FitConfig merged over config.settings defaults.
"""
from dataclasses import dataclass
from typing import Optional

from config import settings
from src.core.config_types import FitConfig
from src.core.exceptions import InvalidArgumentError


@dataclass(frozen=True)
class FitOptions:
    seed: int = settings.SEED
    nugget: float = settings.NUGGET
    elbo_tol: float = settings.ELBO_TOL
    max_iter: int = settings.MAX_ITER
    multistarts: int = settings.MULTISTARTS
    max_evals: int = settings.MAX_EVALS
    literal_tau_exponent: bool = settings.LITERAL_TAU_EXPONENT
    tau_sq_floor: float = settings.TAU_SQ_FLOOR
    eps_active: float = settings.EPS_ACTIVE
    alpha0: float = settings.ALPHA0
    K: int = settings.TRUNCATION_LEVEL
    kappa0: Optional[float] = None
    pca_threshold: float = settings.PCA_VARIANCE_THRESHOLD
    init_clusters: int = settings.INIT_CLUSTERS

    def __post_init__(self):
        if not self.nugget > 0.0:
            raise InvalidArgumentError(f"nugget must be positive, got {self.nugget}")
        if min(self.max_iter, self.multistarts, self.max_evals, self.init_clusters) < 1:
            raise InvalidArgumentError("max_iter, multistarts, max_evals and init_clusters must be >= 1")
        if not self.elbo_tol > 0.0:
            raise InvalidArgumentError(f"elbo_tol must be positive, got {self.elbo_tol}")
        if not 0.0 < self.pca_threshold <= 1.0:
            raise InvalidArgumentError(f"pca_threshold must lie in (0, 1], got {self.pca_threshold}")

    @classmethod
    def from_config(cls, config: Optional[FitConfig] = None) -> "FitOptions":
        """Builds options from a (partial) FitConfig."""
        config = config or {}
        optimizer = config.get("optimizer", {})
        priors = config.get("priors", {})
        values = {
            "seed": config.get("seed"),
            "nugget": config.get("nugget"),
            "elbo_tol": config.get("elbo_tol"),
            "max_iter": config.get("max_iter"),
            "multistarts": optimizer.get("multistarts"),
            "max_evals": optimizer.get("max_evals"),
            "literal_tau_exponent": config.get("literal_tau_exponent"),
            "tau_sq_floor": config.get("tau_sq_floor"),
            "pca_threshold": config.get("pca_threshold"),
            "init_clusters": config.get("init_clusters"),
            "alpha0": priors.get("alpha0"),
            "K": priors.get("K"),
            "kappa0": priors.get("kappa0"),
        }
        return cls(**{k: v for k, v in values.items() if v is not None})
