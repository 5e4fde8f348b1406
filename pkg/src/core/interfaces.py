from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.core.config_types import FitConfig
from src.core.entities.prediction import PredictiveMixture
from src.core.exceptions import InvalidArgumentError
from src.gp.kernel import as_design

# (meta, sidecars): JSON-serializable fields and named matrices for CSV files
Payload = Tuple[Dict[str, Any], Dict[str, np.ndarray]]


class Emulator(ABC):
    """
    Abstract Base Class (Interface).
    Every emulator of the node coefficients (mcGP and the uGP / iGP / pcaGP
    baselines) MUST inherit from this class and implement these methods.

    Node index arguments accept None (all nodes), a 1-D array shared by all
    query rows, or an (m, c) array with one node set per query row.
    """

    model_type: str = ""
    sidecar_names: List[str] = []    # Extra CSV matrices written next to model.json

    def __init__(self, design: np.ndarray, solutions: np.ndarray, nugget: float):
        self.design = as_design(design)
        self.solutions = np.asarray(solutions, dtype=float)
        self.nugget = float(nugget)
        if self.solutions.ndim != 2 or self.solutions.shape[1] != self.design.shape[0]:
            raise InvalidArgumentError(
                f"solutions must be N x {self.design.shape[0]}, got {self.solutions.shape}"
            )

    @property
    def n_nodes(self) -> int:
        return self.solutions.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.design.shape[0]

    @property
    def input_dim(self) -> int:
        return self.design.shape[1]

    @classmethod
    @abstractmethod
    def fit(cls, B: np.ndarray, X: np.ndarray, S: Optional[np.ndarray] = None,
            config: Optional[FitConfig] = None) -> "Emulator":
        """Fits the emulator to (N, n) coefficients B over the (n, p) design X."""

    @abstractmethod
    def node_moments(self, X_new: np.ndarray, node_idx: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Predictive means and variances of the selected node coefficients."""

    @abstractmethod
    def predictive_components(self, X_test: np.ndarray) -> PredictiveMixture:
        """Per-node predictive mixture (weights, component means and variances)."""

    @abstractmethod
    def to_payload(self) -> Payload:
        """Serializable state, without the solutions matrix."""

    @classmethod
    @abstractmethod
    def from_payload(cls, meta: Dict[str, Any], solutions: np.ndarray,
                     sidecars: Dict[str, np.ndarray]) -> "Emulator":
        """Rebuilds a fitted emulator from to_payload output."""

    def query_design(self, X_new: np.ndarray) -> np.ndarray:
        """Coerces query inputs to a finite (m, p) array; 1-D input is read row-major."""
        X_new = np.asarray(X_new, dtype=float)
        if X_new.ndim == 1:
            X_new = X_new.reshape(-1, self.input_dim)
        if X_new.ndim != 2 or X_new.shape[1] != self.input_dim:
            raise InvalidArgumentError(f"inputs must have {self.input_dim} columns, got shape {X_new.shape}")
        if not np.all(np.isfinite(X_new)):
            raise InvalidArgumentError("inputs contain non-finite values")
        return X_new

    def predict_all_nodes(self, X_test: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        (m, N) predictive means and variances for every node at every test input.
        """
        X_test = self.query_design(X_test)
        if X_test.shape[0] == 0:
            return np.zeros((0, self.n_nodes)), np.zeros((0, self.n_nodes))
        return self.node_moments(X_test)

    @staticmethod
    def project(cross: np.ndarray, weights: np.ndarray, node_idx: Optional[np.ndarray]) -> np.ndarray:
        """cross (m, n) times the (n, N) kriging weights of the selected nodes."""
        if node_idx is None:
            return cross @ weights
        node_idx = np.asarray(node_idx)
        if node_idx.ndim == 1:
            return cross @ weights[:, node_idx]
        return np.einsum("mn,nmc->mc", cross, weights[:, node_idx])

    def select(self, values: np.ndarray, node_idx: Optional[np.ndarray], m: int) -> np.ndarray:
        """Per-node values (N,) broadcast to the (m, c) layout of node_idx."""
        if node_idx is None:
            return np.broadcast_to(values, (m, values.shape[0]))
        node_idx = np.asarray(node_idx)
        if node_idx.ndim == 1:
            return np.broadcast_to(values[node_idx], (m, node_idx.shape[0]))
        return values[node_idx]
