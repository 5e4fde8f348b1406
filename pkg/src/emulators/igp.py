"""
iGP baseline: one independent zero-mean GP per node, each with its own
lengthscales and scale fitted by profile likelihood.
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.core.config_types import FitConfig
from src.core.entities.prediction import PredictiveMixture
from src.core.exceptions import InvalidArgumentError
from src.core.fit_options import FitOptions
from src.core.interfaces import Emulator, Payload
from src.core.registry import register_emulator
from src.gp.gp_core import default_bounds, fit_gp, initial_theta, kriging_variance, optimize_theta, tau_sq_closed_form
from src.gp.kernel import as_design, cross_corr
from src.utils.concurrency import parallel_map

logger = logging.getLogger(__name__)


@register_emulator("igp")
class IndependentGP(Emulator):
    """Per-node GPs; nodes whose coefficients are all zero are flagged degenerate."""

    def __init__(self, design: np.ndarray, solutions: np.ndarray, thetas: np.ndarray,
                 tau_sq: np.ndarray, degenerate: np.ndarray, nugget: float):
        super().__init__(design, solutions, nugget)
        self.thetas = np.asarray(thetas, dtype=float).reshape(self.n_nodes, self.input_dim)
        self.tau_sq = np.asarray(tau_sq, dtype=float).reshape(self.n_nodes)
        self.degenerate = np.asarray(degenerate, dtype=bool).reshape(self.n_nodes)
        self._fits = [fit_gp(self.design, theta, tau, self.nugget) for theta, tau in zip(self.thetas, self.tau_sq)]
        self._weights = np.stack(
            [f.factorization.solve(b) for f, b in zip(self._fits, self.solutions)], axis=1
        ) if self.n_nodes else np.zeros((self.n_inputs, 0))

    @classmethod
    def fit(cls, B: np.ndarray, X: np.ndarray, S: Optional[np.ndarray] = None,
            config: Optional[FitConfig] = None) -> "IndependentGP":
        options = FitOptions.from_config(config)
        X = as_design(X)
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[1] != X.shape[0]:
            raise InvalidArgumentError(f"solutions must be N x {X.shape[0]}, got {B.shape}")
        bounds = default_bounds(X)
        init = np.clip(initial_theta(X), *bounds)

        def one(b: np.ndarray) -> Tuple[np.ndarray, float, bool]:
            if not np.any(b):
                return init, 0.0, True
            theta = optimize_theta(X, b, None, init=init, bounds=bounds, seed=options.seed,
                                   multistarts=options.multistarts, max_evals=options.max_evals,
                                   nugget=options.nugget)
            return theta, tau_sq_closed_form(X, theta, b, None, options.nugget), False

        results = parallel_map(one, list(B))
        logger.info("iGP: fitted %d node GPs (%d degenerate)", len(results), sum(r[2] for r in results))
        return cls(design=X, solutions=B,
                   thetas=np.array([r[0] for r in results]).reshape(B.shape[0], X.shape[1]),
                   tau_sq=np.array([r[1] for r in results]), degenerate=np.array([r[2] for r in results]),
                   nugget=options.nugget)

    def _moments_for_node(self, j: int, X_new: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        fit = self._fits[j]
        cross = cross_corr(X_new, self.design, fit.theta)
        return cross @ self._weights[:, j], kriging_variance(fit, cross)

    def node_moments(self, X_new: np.ndarray, node_idx: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        X_new = self.query_design(X_new)
        m = X_new.shape[0]
        if node_idx is None or np.ndim(node_idx) == 1:
            nodes = np.arange(self.n_nodes) if node_idx is None else np.asarray(node_idx)
            means = np.empty((m, nodes.shape[0]))
            variances = np.empty((m, nodes.shape[0]))
            for col, j in enumerate(nodes):
                means[:, col], variances[:, col] = self._moments_for_node(int(j), X_new)
            return means, variances

        node_idx = np.asarray(node_idx)
        means = np.empty(node_idx.shape)
        variances = np.empty(node_idx.shape)
        for j in np.unique(node_idx):
            rows, cols = np.nonzero(node_idx == j)
            mean_j, var_j = self._moments_for_node(int(j), X_new[rows])
            means[rows, cols] = mean_j
            variances[rows, cols] = var_j
        return means, variances

    def predictive_components(self, X_test: np.ndarray) -> PredictiveMixture:
        means, variances = self.predict_all_nodes(X_test)
        return PredictiveMixture(weights=np.ones((self.n_nodes, 1)), means=means[:, :, None],
                                 variances=variances[:, :, None])

    def to_payload(self) -> Payload:
        return {
            "nugget": self.nugget,
            "design": self.design.tolist(),
            "thetas": self.thetas.tolist(),
            "tau_sq": self.tau_sq.tolist(),
            "degenerate": self.degenerate.tolist(),
        }, {}

    @classmethod
    def from_payload(cls, meta: Dict[str, Any], solutions: np.ndarray,
                     sidecars: Dict[str, np.ndarray]) -> "IndependentGP":
        return cls(design=np.array(meta["design"], dtype=float), solutions=solutions,
                   thetas=np.array(meta["thetas"], dtype=float), tau_sq=np.array(meta["tau_sq"], dtype=float),
                   degenerate=np.array(meta["degenerate"], dtype=bool), nugget=meta["nugget"])
