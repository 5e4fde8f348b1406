"""
Error-rate estimation for the emulation of FEM solutions.

The total L2 error E(h_X, h_T) is modelled as a h_X^nu + b h_T^(r+1) with
integer rates chosen by grid search on R^2.
"""
import itertools
import logging
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from config.settings import INPUT_RANGE, MC_SAMPLES, NU_GRID, R_GRID
from src.core.exceptions import DegenerateRegressionError, InvalidArgumentError
from src.core.protocols import NodeMomentSource
from src.emulators.field import predict_field_batch
from src.fem.mesh import TriMesh
from src.fem.poisson import analytic_solution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegressionResult:
    a: float
    b: float
    nu: int
    r: int
    r_squared: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else -np.inf
    return 1.0 - ss_res / ss_tot


def convergence_regression(h_x: Sequence[float], h_t: Sequence[float], errors: Sequence[float],
                           nu_grid: Sequence[int] = NU_GRID, r_grid: Sequence[int] = R_GRID) -> RegressionResult:
    """
    Fits E = a h_X^nu + b h_T^(r+1) for every (nu, r) on the grids and keeps
    the pair with the largest R^2 (first pair wins ties).

    Args:
        h_x: Design fill distances, one per grid cell
        h_t: Mesh sizes, one per grid cell
        errors: Positive errors, one per grid cell

    Raises:
        DegenerateRegressionError: If every error is zero.
        InvalidArgumentError: Fewer than 4 cells, mismatched lengths or negative errors.
    """
    h_x = np.asarray(h_x, dtype=float).ravel()
    h_t = np.asarray(h_t, dtype=float).ravel()
    y = np.asarray(errors, dtype=float).ravel()
    if not (h_x.shape == h_t.shape == y.shape):
        raise InvalidArgumentError("h_X, h_T and errors must have equal length")
    if y.size < 4:
        raise InvalidArgumentError(f"need at least 4 grid points, got {y.size}")
    if not np.all(np.isfinite(y)) or np.any(y < 0.0):
        raise InvalidArgumentError("errors must be finite and nonnegative")
    if not np.any(y > 0.0):
        raise DegenerateRegressionError("all convergence errors are zero")
    if np.any(h_x <= 0.0) or np.any(h_t <= 0.0):
        raise InvalidArgumentError("grid spacings must be positive")

    best = None
    for nu, r in itertools.product(nu_grid, r_grid):
        A = np.column_stack([h_x ** nu, h_t ** (r + 1)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        score = _r_squared(y, A @ coef)
        if best is None or score > best.r_squared:
            best = RegressionResult(a=float(coef[0]), b=float(coef[1]), nu=int(nu), r=int(r), r_squared=score)
    logger.info("Convergence fit: nu=%d r=%d a=%.4g b=%.4g (R^2=%.6f)", best.nu, best.r, best.a, best.b, best.r_squared)
    return best


def sample_space_input(samples: int, seed: int, input_range: Tuple[float, float] = INPUT_RANGE):
    """Seeded uniform (s, x) draws on the unit square times the input range."""
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, 1.0, size=(samples, 2))
    inputs = rng.uniform(input_range[0], input_range[1], size=(samples, 1))
    return points, inputs


def monte_carlo_l2_error(model: NodeMomentSource, mesh: TriMesh, samples: int = MC_SAMPLES, seed: int = 0,
                         exact: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
                         input_range: Tuple[float, float] = INPUT_RANGE) -> float:
    """
    L2 error over space x input of the predictive field mean:

        sqrt(|Omega x X| * mean_i (mean_field(s_i, x_i) - u(s_i, x_i))^2)
    """
    if samples < 1:
        raise InvalidArgumentError(f"samples must be >= 1, got {samples}")
    exact = exact or (lambda s, x: analytic_solution(s, x[:, 0]))
    points, inputs = sample_space_input(samples, seed, input_range)
    mean, _ = predict_field_batch(model, mesh, points, inputs)
    diff = mean - np.asarray(exact(points, inputs), dtype=float)
    volume = input_range[1] - input_range[0]
    return float(np.sqrt(volume * np.mean(diff * diff)))
