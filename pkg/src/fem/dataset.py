"""
Training and test datasets from the FEM Poisson generator.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from config.settings import DEFAULT_TEST_SIZE, DEFAULT_TRAIN_SIZE, INPUT_RANGE
from src.core.exceptions import InvalidArgumentError
from src.fem.mesh import TriMesh, build_mesh
from src.fem.poisson import assemble_stiffness, solve_poisson
from src.utils.concurrency import parallel_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PoissonDataset:
    """Node values of the FEM solution, one column per input (rows follow mesh nodes)."""
    mesh: TriMesh
    inputs: np.ndarray          # (n, 1)
    solutions: np.ndarray       # (N, n)
    analytic_available: bool = True

    def __post_init__(self):
        if self.solutions.shape != (self.mesh.n_nodes, self.inputs.shape[0]):
            raise InvalidArgumentError(
                f"solutions must be {self.mesh.n_nodes} x {self.inputs.shape[0]}, got {self.solutions.shape}"
            )

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[0]


def training_inputs(n: int = DEFAULT_TRAIN_SIZE) -> np.ndarray:
    """
    n cell midpoints of [-1, 1]: x_i = -1 + (2i - 1)/n.

    n = 5 gives -0.8, -0.4, 0, 0.4, 0.8.
    """
    if n < 1:
        raise InvalidArgumentError(f"design size must be >= 1, got {n}")
    lo, hi = INPUT_RANGE
    i = np.arange(1, n + 1)
    return (lo + (hi - lo) * (2 * i - 1) / (2.0 * n)).reshape(-1, 1)


def evaluation_inputs(m: int = DEFAULT_TEST_SIZE) -> np.ndarray:
    """m equispaced points including both ends of [-1, 1]."""
    if m < 2:
        raise InvalidArgumentError(f"test size must be >= 2, got {m}")
    return np.linspace(*INPUT_RANGE, m).reshape(-1, 1)


def generate_dataset(h: float, inputs: Iterable[float], mesh: Optional[TriMesh] = None) -> PoissonDataset:
    """
    Solves the Poisson problem once per input on a single mesh.

    Args:
        h: Target mesh size (ignored when `mesh` is given)
        inputs: Scalar inputs in [-1, 1]
        mesh: Existing mesh to reuse

    Returns:
        PoissonDataset with an N x n solution matrix
    """
    xs = np.asarray(list(inputs), dtype=float).ravel()
    if xs.size == 0:
        raise InvalidArgumentError("at least one input is required")
    mesh = build_mesh(h) if mesh is None else mesh
    stiffness = assemble_stiffness(mesh)
    columns = parallel_map(lambda x: solve_poisson(mesh, float(x), stiffness=stiffness), xs)
    logger.info("Generated %d FEM solutions on %d nodes (h=%.4g)", xs.size, mesh.n_nodes, mesh.mesh_size)
    return PoissonDataset(mesh=mesh, inputs=xs.reshape(-1, 1), solutions=np.column_stack(columns))
