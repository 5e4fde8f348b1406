from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NodePrediction:
    """Predictive moments of one node coefficient at one input, with its mixture components."""
    mean: float
    variance: float
    cluster_means: np.ndarray       # (K,)
    cluster_variances: np.ndarray   # (K,)
    weights: np.ndarray             # (K,) responsibilities row


@dataclass(frozen=True)
class PredictiveMixture:
    """
    Per-node Gaussian-mixture predictive distributions for a batch of inputs.

    Single-Gaussian emulators use K = 1 with unit weights.
    """
    weights: np.ndarray     # (N, K)
    means: np.ndarray       # (m, N, K)
    variances: np.ndarray   # (m, N, K)
