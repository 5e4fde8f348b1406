"""
Typed configuration dictionaries for fitting and evaluation.

Every key is optional; missing keys fall back to config.settings.
"""
from typing import TypedDict


class OptimizerConfig(TypedDict, total=False):
    """Simplex search in log(theta) used by every profile-likelihood fit."""
    multistarts: int             # Starts per optimization, the first is the current theta
    max_evals: int               # Objective evaluations per start


class PriorOverrides(TypedDict, total=False):
    """Replaces the data-driven hyperprior defaults."""
    alpha0: float                # Stick-breaking concentration
    K: int                       # Truncation level
    kappa0: float                # Wishart degrees of freedom (>= d)


class FitConfig(TypedDict, total=False):
    """Config passed to Emulator.fit. Baselines read the GP keys only."""
    seed: int
    nugget: float
    elbo_tol: float              # Relative ELBO change stopping the EM loop
    max_iter: int
    optimizer: OptimizerConfig
    priors: PriorOverrides
    literal_tau_exponent: bool   # -log(tau^2) instead of -n*log(tau^2) in the E-step
    tau_sq_floor: float
    pca_threshold: float         # pcaGP explained-variance target
    init_clusters: int           # Occupied clusters in the initial responsibilities


class StudyConfig(TypedDict, total=False):
    """Grid and sampling settings of the convergence study."""
    design_sizes: list
    mesh_sizes: list
    mc_samples: int
    model_type: str
