"""
uGP baseline: independent per-node GPs sharing one set of lengthscales.

The shared theta minimizes the unit-weight profile objective over all nodes;
each node keeps its own closed-form scale b_j^T Phi^{-1} b_j / n.
"""
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.core.config_types import FitConfig
from src.core.entities.prediction import PredictiveMixture
from src.core.exceptions import InvalidArgumentError
from src.core.fit_options import FitOptions
from src.core.interfaces import Emulator, Payload
from src.core.registry import register_emulator
from src.gp.gp_core import default_bounds, fit_gp, initial_theta, kriging_variance, optimize_theta
from src.gp.kernel import as_design, cross_corr


@register_emulator("ugp")
class SharedLengthscaleGP(Emulator):

    def __init__(self, design: np.ndarray, solutions: np.ndarray, theta: np.ndarray,
                 tau_sq: np.ndarray, nugget: float):
        super().__init__(design, solutions, nugget)
        self.tau_sq = np.asarray(tau_sq, dtype=float).reshape(self.n_nodes)
        self._fit = fit_gp(self.design, theta, 1.0, self.nugget)
        self.theta = self._fit.theta
        self._weights = self._fit.factorization.solve(self.solutions.T)   # (n, N)

    @classmethod
    def fit(cls, B: np.ndarray, X: np.ndarray, S: Optional[np.ndarray] = None,
            config: Optional[FitConfig] = None) -> "SharedLengthscaleGP":
        options = FitOptions.from_config(config)
        X = as_design(X)
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[1] != X.shape[0]:
            raise InvalidArgumentError(f"solutions must be N x {X.shape[0]}, got {B.shape}")
        bounds = default_bounds(X)
        theta = np.clip(initial_theta(X), *bounds)
        if np.any(B):
            theta = optimize_theta(X, B, None, init=theta, bounds=bounds, seed=options.seed,
                                   multistarts=options.multistarts, max_evals=options.max_evals,
                                   nugget=options.nugget)
        fac = fit_gp(X, theta, 1.0, options.nugget).factorization
        tau_sq = np.maximum(fac.quadratic_form(B.T), 0.0) / X.shape[0]
        return cls(design=X, solutions=B, theta=theta, tau_sq=np.atleast_1d(tau_sq), nugget=options.nugget)

    def node_moments(self, X_new: np.ndarray, node_idx: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        X_new = self.query_design(X_new)
        cross = cross_corr(X_new, self.design, self.theta)
        # Unit-scale kriging variance, shared by every node
        base = kriging_variance(self._fit, cross)
        means = self.project(cross, self._weights, node_idx)
        variances = base[:, None] * self.select(self.tau_sq, node_idx, X_new.shape[0])
        return means, variances

    def predictive_components(self, X_test: np.ndarray) -> PredictiveMixture:
        means, variances = self.predict_all_nodes(X_test)
        return PredictiveMixture(weights=np.ones((self.n_nodes, 1)), means=means[:, :, None],
                                 variances=variances[:, :, None])

    def to_payload(self) -> Payload:
        return {
            "nugget": self.nugget,
            "design": self.design.tolist(),
            "theta": self.theta.tolist(),
            "tau_sq": self.tau_sq.tolist(),
        }, {}

    @classmethod
    def from_payload(cls, meta: Dict[str, Any], solutions: np.ndarray,
                     sidecars: Dict[str, np.ndarray]) -> "SharedLengthscaleGP":
        return cls(design=np.array(meta["design"], dtype=float), solutions=solutions,
                   theta=np.array(meta["theta"], dtype=float), tau_sq=np.array(meta["tau_sq"], dtype=float),
                   nugget=meta["nugget"])
