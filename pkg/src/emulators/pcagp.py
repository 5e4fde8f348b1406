"""
pcaGP baseline: truncated discrete Karhunen-Loeve expansion of the training
fields plus independent GPs on the principal scores.

Fields are centred by the node-wise mean over the design; the centred N x n
matrix is decomposed by SVD with uniform node weights and the smallest M
components reaching the explained-variance threshold are kept.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from config.settings import PCA_VARIANCE_THRESHOLD
from src.core.config_types import FitConfig
from src.core.entities.prediction import PredictiveMixture
from src.core.exceptions import InvalidArgumentError
from src.core.fit_options import FitOptions
from src.core.interfaces import Emulator, Payload
from src.core.registry import register_emulator
from src.emulators.igp import IndependentGP
from src.gp.kernel import as_design


@dataclass(frozen=True)
class PcaBasis:
    mean_field: np.ndarray                  # (N,)
    components: np.ndarray                  # (N, M), orthonormal columns
    scores: np.ndarray                      # (n, M)
    explained_variance_ratios: np.ndarray   # (M,)

    @property
    def M(self) -> int:
        return self.components.shape[1]

    def reconstruct(self, scores: np.ndarray) -> np.ndarray:
        """(m, N) fields from (m, M) scores."""
        return self.mean_field[None, :] + scores @ self.components.T


def fpca(B: np.ndarray, threshold: float = PCA_VARIANCE_THRESHOLD) -> PcaBasis:
    """
    Truncated principal components of the centred solution matrix.

    M is the smallest count whose cumulative squared-singular-value ratio is
    at least `threshold`; a zero-variance matrix gives M = 0.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[1] < 2:
        raise InvalidArgumentError(f"pcaGP needs at least 2 training inputs, got shape {B.shape}")
    mean_field = B.mean(axis=1)
    centred = B - mean_field[:, None]
    U, s, Vt = np.linalg.svd(centred, full_matrices=False)
    energy = s * s
    total = float(energy.sum())
    if total <= 0.0:
        return PcaBasis(mean_field=mean_field, components=np.zeros((B.shape[0], 0)),
                        scores=np.zeros((B.shape[1], 0)), explained_variance_ratios=np.zeros(0))
    ratios = energy / total
    cumulative = np.cumsum(ratios)
    M = min(int(np.searchsorted(cumulative, threshold - 1e-12)) + 1, ratios.shape[0])
    return PcaBasis(mean_field=mean_field, components=U[:, :M], scores=Vt[:M].T * s[:M],
                    explained_variance_ratios=ratios[:M])


@register_emulator("pcagp")
class PcaGP(Emulator):
    """Predictive variance per node is sum_l psi_l(s_j)^2 var_l(x) (independent score GPs)."""

    def __init__(self, design: np.ndarray, solutions: np.ndarray, basis: PcaBasis,
                 score_gp: Optional[IndependentGP], nugget: float):
        super().__init__(design, solutions, nugget)
        self.basis = basis
        self.score_gp = score_gp

    @classmethod
    def fit(cls, B: np.ndarray, X: np.ndarray, S: Optional[np.ndarray] = None,
            config: Optional[FitConfig] = None) -> "PcaGP":
        options = FitOptions.from_config(config)
        X = as_design(X)
        basis = fpca(B, options.pca_threshold)
        score_gp = IndependentGP.fit(basis.scores.T, X, None, config) if basis.M else None
        return cls(design=X, solutions=B, basis=basis, score_gp=score_gp, nugget=options.nugget)

    def node_moments(self, X_new: np.ndarray, node_idx: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        X_new = self.query_design(X_new)
        m = X_new.shape[0]
        mean = np.array(self.select(self.basis.mean_field, node_idx, m), dtype=float)
        if self.score_gp is None:
            return mean, np.zeros_like(mean)
        score_mean, score_var = self.score_gp.node_moments(X_new)        # (m, M)
        psi = self.basis.components.T                                     # (M, N)
        mean += self.project(score_mean, psi, node_idx)
        variances = self.project(score_var, psi * psi, node_idx)
        return mean, np.maximum(variances, 0.0)

    def predictive_components(self, X_test: np.ndarray) -> PredictiveMixture:
        means, variances = self.predict_all_nodes(X_test)
        return PredictiveMixture(weights=np.ones((self.n_nodes, 1)), means=means[:, :, None],
                                 variances=variances[:, :, None])

    def to_payload(self) -> Payload:
        b = self.basis
        meta = {
            "nugget": self.nugget,
            "design": self.design.tolist(),
            "mean_field": b.mean_field.tolist(),
            "components": b.components.tolist(),
            "scores": b.scores.tolist(),
            "explained_variance_ratios": b.explained_variance_ratios.tolist(),
            "score_gp": self.score_gp.to_payload()[0] if self.score_gp is not None else None,
        }
        return meta, {}

    @classmethod
    def from_payload(cls, meta: Dict[str, Any], solutions: np.ndarray,
                     sidecars: Dict[str, np.ndarray]) -> "PcaGP":
        N = solutions.shape[0]
        M = len(meta["explained_variance_ratios"])
        n = len(meta["design"])
        basis = PcaBasis(
            mean_field=np.array(meta["mean_field"], dtype=float),
            components=np.array(meta["components"], dtype=float).reshape(N, M),
            scores=np.array(meta["scores"], dtype=float).reshape(n, M),
            explained_variance_ratios=np.array(meta["explained_variance_ratios"], dtype=float),
        )
        score_gp = None
        if meta["score_gp"] is not None:
            score_gp = IndependentGP.from_payload(meta["score_gp"], basis.scores.T, {})
        return cls(design=np.array(meta["design"], dtype=float), solutions=solutions, basis=basis,
                   score_gp=score_gp, nugget=meta["nugget"])
