"""
Protocol definitions for the prediction consumers.

Field reconstruction and evaluation only need these capabilities, so any
emulator (or a test double) providing them can be plugged in.
"""
from typing import Optional, Protocol, Tuple, runtime_checkable

import numpy as np

from src.core.entities.prediction import PredictiveMixture


@runtime_checkable
class NodeMomentSource(Protocol):
    """
    Anything that predicts node-coefficient moments.

    Implementations:
    - FittedEmulator (mcGP)
    - SharedLengthscaleGP, IndependentGP, PcaGP
    """

    n_nodes: int

    def node_moments(self, X_new: np.ndarray, node_idx: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Predictive means and variances of node coefficients.

        Args:
            X_new: (m, p) inputs
            node_idx: None, (c,) or (m, c) node indices

        Returns:
            Tuple of (means, variances) shaped like the node selection
        """
        ...


@runtime_checkable
class MixtureSource(Protocol):
    """Emulators exposing the per-node predictive mixture (for CRPS)."""

    model_type: str

    def predict_all_nodes(self, X_test: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(m, N) means and variances."""
        ...

    def predictive_components(self, X_test: np.ndarray) -> PredictiveMixture:
        """Weights (N, K), component means and variances (m, N, K)."""
        ...
