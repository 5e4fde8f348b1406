from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional

import numpy as np


@dataclass
class EvalReport:
    """
    Accuracy and cost of one emulator on a test design.

    CRPS is averaged over all (test input, node) pairs.
    """
    model_type: str
    rmse: float
    mean_crps: float
    fit_seconds: float
    predict_ms_per_run: float
    n_test: int
    per_node_rmse: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if self.per_node_rmse is not None:
            data["per_node_rmse"] = [float(v) for v in self.per_node_rmse]
        return data


@dataclass
class ClusterRow:
    """One line of the cluster table."""
    k: int
    tau_sq: float
    theta: List[float]
    node_count: int          # Nodes with q(z_j=k) >= display threshold
    argmax_count: int        # Nodes whose most likely cluster is k
    max_responsibility: float
    active: bool
    degenerate: bool


@dataclass
class ClusterReport:
    """Cluster table plus the per-node hard assignment."""
    threshold: float
    rows: List[ClusterRow] = field(default_factory=list)
    node_argmax: Optional[np.ndarray] = None
    node_max: Optional[np.ndarray] = None

    @property
    def displayed_clusters(self) -> List[int]:
        return [row.k for row in self.rows if row.max_responsibility >= self.threshold]
