"""
Mesh-clustered GP emulator (mcGP).

Each node coefficient is predicted by the responsibility-weighted mixture of
the cluster krigers:

    mean_j(x) = sum_k q_jk m_jk(x)
    var_j(x)  = sum_k q_jk [v_k(x) + m_jk(x)^2] - mean_j(x)^2

with m_jk(x) = r_k(x) Phi_k^{-1} b_j and v_k(x) = tau_k^2 (1 - r_k(x) Phi_k^{-1} r_k(x)^T).
The kernel cross-vector r_k(x) and v_k(x) depend on the cluster only, so
they are computed once per (x, k) and shared by all nodes.
"""
import logging
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from config.settings import ACTIVE_DISPLAY_THRESHOLD
from src.core.config_types import FitConfig
from src.core.entities.cluster_hyper import ClusterHyper
from src.core.entities.prediction import NodePrediction, PredictiveMixture
from src.core.entities.priors import HyperPriors
from src.core.entities.reports import ClusterReport, ClusterRow
from src.core.entities.variational_state import VariationalState
from src.core.exceptions import InvalidArgumentError
from src.core.fit_options import FitOptions
from src.core.interfaces import Emulator, Payload
from src.core.registry import register_emulator
from src.gp.gp_core import GpFit, kriging_variance
from src.gp.kernel import corr_matrix, cross_corr, factorize
from src.mixture.fitter import check_training_data, run_variational_em
from src.mixture.updates import default_priors

logger = logging.getLogger(__name__)


@register_emulator("mcgp")
class FittedEmulator(Emulator):
    """
    Frozen mcGP model: training data, variational state, cluster
    hyperparameters and the per-cluster factorization caches.

    Immutable after construction and safe to share across threads.
    """

    sidecar_names = ["responsibilities"]

    def __init__(self, design: np.ndarray, solutions: np.ndarray, nodes: np.ndarray,
                 state: VariationalState, hypers: Sequence[ClusterHyper], priors: HyperPriors,
                 nugget: float, elbo_trace: Sequence[float] = (), converged: bool = True,
                 monotone: bool = True):
        super().__init__(design, solutions, nugget)
        self.nodes = np.asarray(nodes, dtype=float)
        self.state = state
        self.hypers = list(hypers)
        self.priors = priors
        self.elbo_trace = [float(v) for v in elbo_trace]
        self.converged = bool(converged)
        self.monotone = bool(monotone)
        if state.responsibilities.shape != (self.n_nodes, len(self.hypers)):
            raise InvalidArgumentError(
                f"responsibilities {state.responsibilities.shape} do not match "
                f"{self.n_nodes} nodes and {len(self.hypers)} clusters"
            )

        # Clusters with an all-zero responsibility column never contribute
        R = state.responsibilities
        self._live = [k for k in range(self.K) if np.any(R[:, k] > 0.0)]
        self._fits: Dict[int, GpFit] = {}
        self._weights: Dict[int, np.ndarray] = {}
        for k in self._live:
            h = self.hypers[k]
            fac = factorize(corr_matrix(self.design, h.theta, self.nugget), self.nugget)
            self._fits[k] = GpFit(theta=h.theta, tau_sq=h.tau_sq, factorization=fac, design=self.design)
            self._weights[k] = fac.solve(self.solutions.T)     # (n, N)

    @property
    def K(self) -> int:
        return len(self.hypers)

    @property
    def responsibilities(self) -> np.ndarray:
        return self.state.responsibilities

    @property
    def n_iter(self) -> int:
        return len(self.elbo_trace)

    @classmethod
    def fit(cls, B: np.ndarray, X: np.ndarray, S: Optional[np.ndarray] = None,
            config: Optional[FitConfig] = None, priors: Optional[HyperPriors] = None) -> "FittedEmulator":
        return fit_mcgp(B, X, S, priors, config)

    def _cluster_terms(self, X_new: np.ndarray) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
        """Per live cluster: (m, n) cross-correlations and (m,) kriging variances."""
        terms = {}
        for k in self._live:
            fit = self._fits[k]
            cross = cross_corr(X_new, self.design, fit.theta)
            terms[k] = (cross, kriging_variance(fit, cross))
        return terms

    def node_moments(self, X_new: np.ndarray, node_idx: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        X_new = self.query_design(X_new)
        m = X_new.shape[0]
        mean = None
        second = None
        for k, (cross, var) in self._cluster_terms(X_new).items():
            mk = self.project(cross, self._weights[k], node_idx)
            q = self.select(self.responsibilities[:, k], node_idx, m)
            if mean is None:
                mean, second = np.zeros_like(mk), np.zeros_like(mk)
            mean += q * mk
            second += q * (var[:, None] + mk * mk)
        return mean, np.maximum(second - mean * mean, 0.0)

    def predict_node(self, j: int, x: Sequence[float]) -> NodePrediction:
        """
        Mixture prediction of node j's coefficient at one input.

        Returns:
            NodePrediction with the mixture moments and the per-cluster
            kriging means/variances weighted by row j of the responsibilities
        """
        if not 0 <= j < self.n_nodes:
            raise InvalidArgumentError(f"node index {j} outside [0, {self.n_nodes})")
        X_new = self.query_design(np.atleast_1d(np.asarray(x, dtype=float)))
        if X_new.shape[0] != 1:
            raise InvalidArgumentError("predict_node takes a single input point")
        weights = self.responsibilities[j].copy()
        means = np.zeros(self.K)
        variances = np.zeros(self.K)
        for k, (cross, var) in self._cluster_terms(X_new).items():
            means[k] = float(cross[0] @ self._weights[k][:, j])
            variances[k] = float(var[0])
        mean = float(weights @ means)
        variance = float(weights @ (variances + means * means) - mean * mean)
        return NodePrediction(mean=mean, variance=max(variance, 0.0), cluster_means=means,
                              cluster_variances=variances, weights=weights)

    def predictive_components(self, X_test: np.ndarray) -> PredictiveMixture:
        X_test = self.query_design(X_test)
        m = X_test.shape[0]
        means = np.zeros((m, self.n_nodes, self.K))
        variances = np.zeros((m, self.n_nodes, self.K))
        for k, (cross, var) in self._cluster_terms(X_test).items():
            means[:, :, k] = cross @ self._weights[k]
            variances[:, :, k] = var[:, None]
        return PredictiveMixture(weights=self.responsibilities, means=means, variances=variances)

    def cluster_report(self, threshold: float = ACTIVE_DISPLAY_THRESHOLD) -> ClusterReport:
        """Per-cluster hyperparameters and node counts at the display threshold."""
        R = self.responsibilities
        argmax = R.argmax(axis=1)
        rows = []
        for k, h in enumerate(self.hypers):
            rows.append(ClusterRow(
                k=k, tau_sq=float(h.tau_sq), theta=[float(t) for t in h.theta],
                node_count=int(np.sum(R[:, k] >= threshold)),
                argmax_count=int(np.sum(argmax == k)),
                max_responsibility=float(R[:, k].max()),
                active=bool(h.active), degenerate=bool(h.degenerate),
            ))
        return ClusterReport(threshold=threshold, rows=rows, node_argmax=argmax, node_max=R.max(axis=1))

    def to_payload(self) -> Payload:
        s, p = self.state, self.priors
        meta = {
            "nugget": self.nugget,
            "design": self.design.tolist(),
            "nodes": self.nodes.tolist(),
            "converged": self.converged,
            "monotone": self.monotone,
            "elbo_trace": self.elbo_trace,
            "priors": {
                "alpha0": float(p.alpha0), "mu0": p.mu0.tolist(), "Sigma0": p.Sigma0.tolist(),
                "W0": p.W0.tolist(), "kappa0": float(p.kappa0), "K": int(p.K), "regularized": bool(p.regularized),
            },
            "state": {
                "beta_a": s.beta_a.tolist(), "beta_b": s.beta_b.tolist(),
                "gauss_means": s.gauss_means.tolist(), "gauss_precisions": s.gauss_precisions.tolist(),
                "wishart_scales": s.wishart_scales.tolist(), "wishart_dofs": s.wishart_dofs.tolist(),
            },
            "hypers": [
                {"theta": h.theta.tolist(), "tau_sq": float(h.tau_sq), "active": bool(h.active),
                 "degenerate": bool(h.degenerate)}
                for h in self.hypers
            ],
        }
        return meta, {"responsibilities": self.responsibilities}

    @classmethod
    def from_payload(cls, meta: Dict[str, Any], solutions: np.ndarray,
                     sidecars: Dict[str, np.ndarray]) -> "FittedEmulator":
        p, s = meta["priors"], meta["state"]
        priors = HyperPriors(
            alpha0=p["alpha0"], mu0=np.array(p["mu0"], dtype=float), Sigma0=np.array(p["Sigma0"], dtype=float),
            W0=np.array(p["W0"], dtype=float), kappa0=p["kappa0"], K=p["K"], regularized=p["regularized"],
        )
        K = len(meta["hypers"])
        d = priors.d
        state = VariationalState(
            beta_a=np.array(s["beta_a"], dtype=float).reshape(K - 1),
            beta_b=np.array(s["beta_b"], dtype=float).reshape(K - 1),
            gauss_means=np.array(s["gauss_means"], dtype=float).reshape(K, d),
            gauss_precisions=np.array(s["gauss_precisions"], dtype=float).reshape(K, d, d),
            wishart_scales=np.array(s["wishart_scales"], dtype=float).reshape(K, d, d),
            wishart_dofs=np.array(s["wishart_dofs"], dtype=float).reshape(K),
            responsibilities=sidecars["responsibilities"],
        )
        hypers = [
            ClusterHyper(theta=np.array(h["theta"], dtype=float), tau_sq=float(h["tau_sq"]),
                         active=bool(h["active"]), degenerate=bool(h["degenerate"]))
            for h in meta["hypers"]
        ]
        return cls(design=np.array(meta["design"], dtype=float), solutions=solutions,
                   nodes=np.array(meta["nodes"], dtype=float).reshape(solutions.shape[0], d),
                   state=state, hypers=hypers, priors=priors, nugget=meta["nugget"],
                   elbo_trace=meta["elbo_trace"], converged=meta["converged"],
                   monotone=meta.get("monotone", True))


def fit_mcgp(B: np.ndarray, X: np.ndarray, S: np.ndarray, priors: Optional[HyperPriors] = None,
             config: Optional[FitConfig] = None) -> FittedEmulator:
    """
    Fits the mesh-clustered GP mixture and freezes it.

    Args:
        B: (N, n) node coefficients
        X: (n, p) design
        S: (N, d) node coordinates
        priors: Hyperpriors (default: data-driven, with config overrides)
        config: Fitting options

    Returns:
        FittedEmulator, flagged converged=False when max_iter was reached
    """
    if S is None:
        raise InvalidArgumentError("mcgp needs node coordinates")
    options = FitOptions.from_config(config)
    B, X, S = check_training_data(B, X, S)
    if priors is None:
        priors = default_priors(S, alpha0=options.alpha0, K=options.K, kappa0=options.kappa0)
    result = run_variational_em(B, X, S, priors, options)
    logger.info("mcGP fit: %d iterations, converged=%s, %d clusters above display threshold",
                result.n_iter, result.converged,
                int(np.sum(result.state.responsibilities.max(axis=0) >= ACTIVE_DISPLAY_THRESHOLD)))
    return FittedEmulator(design=X, solutions=B, nodes=S, state=result.state, hypers=result.hypers,
                          priors=priors, nugget=options.nugget, elbo_trace=result.elbo_trace,
                          converged=result.converged, monotone=result.monotone)


def active_cluster_count(model: FittedEmulator, threshold: float = ACTIVE_DISPLAY_THRESHOLD) -> int:
    """Clusters with max_j q(z_j = k) >= threshold."""
    return int(np.sum(model.responsibilities.max(axis=0) >= threshold))
