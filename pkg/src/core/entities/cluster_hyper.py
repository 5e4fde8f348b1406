from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ClusterHyper:
    """GP hyperparameters of one mixture component."""
    theta: np.ndarray
    tau_sq: float
    active: bool = True          # Enough responsibility mass for an M-step
    degenerate: bool = False     # Zero output energy, tau_sq pinned at the floor

    def replace(self, **changes) -> "ClusterHyper":
        return replace(self, **changes)
