"""
Single-output GP machinery: weighted profile likelihood, lengthscale search,
closed-form scale and the kriging posterior.

Outputs are zero-mean. For a set of output vectors b_j on a common design,
with weights w_j, the profile objective is

    log|Phi_theta| + n * log( sum_j w_j b_j^T Phi_theta^{-1} b_j )

and equals tr(Phi^{-1} S_w) inside the log with S_w = sum_j w_j b_j b_j^T,
so each evaluation costs one n x n factorization regardless of how many
vectors enter.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

from config.settings import (
    INTERPOLATION_NODE_FLOOR, INTERPOLATION_RTOL, MAX_EVALS, MULTISTARTS, NUGGET,
    SIMPLEX_FATOL, SIMPLEX_XATOL, THETA_BOUND_FACTORS, VARIANCE_ROUNDOFF,
)
from src.core.exceptions import (
    DegenerateClusterError, InvalidArgumentError, NumericalDegeneracyError,
)
from src.gp.kernel import (
    CorrelationFactorization, as_design, check_lengthscales, corr_matrix,
    cross_corr, factorize,
)

logger = logging.getLogger(__name__)

Bounds = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class GpFit:
    """Hyperparameters and factorized correlation matrix of one zero-mean GP."""
    theta: np.ndarray
    tau_sq: float
    factorization: CorrelationFactorization
    design: np.ndarray

    def __post_init__(self):
        if not self.tau_sq >= 0.0:
            raise InvalidArgumentError(f"tau_sq must be nonnegative, got {self.tau_sq}")


def _as_outputs(B_cols: np.ndarray, n: int) -> np.ndarray:
    B_cols = np.asarray(B_cols, dtype=float)
    if B_cols.ndim == 1:
        B_cols = B_cols[None, :]
    if B_cols.ndim != 2 or B_cols.shape[1] != n:
        raise InvalidArgumentError(f"output vectors must have length {n}, got shape {B_cols.shape}")
    return B_cols


def _as_weights(weights: Optional[np.ndarray], count: int) -> np.ndarray:
    if weights is None:
        return np.ones(count)
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    if weights.shape != (count,):
        raise InvalidArgumentError(f"expected {count} weights, got shape {weights.shape}")
    if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
        raise InvalidArgumentError("weights must be nonnegative and finite")
    return weights


def weighted_scatter(B_cols: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """S_w = sum_j w_j b_j b_j^T for rows b_j of B_cols."""
    return (B_cols.T * weights) @ B_cols


class ProfileObjective:
    """
    Weighted profile objective with the scatter matrix precomputed.

    Evaluations go through `log_theta` so the simplex search runs in
    log-lengthscale space. The search only accepts lengthscales at which
    every nonzero output vector is reproduced at the design to within
    `interpolation_rtol` of its norm: the kriging mean misses b_j at the
    design by exactly nugget * Phi^{-1} b_j. The admissible set uses all
    output vectors whatever their weights.
    """

    def __init__(self, X: np.ndarray, B_cols: np.ndarray, weights: Optional[np.ndarray] = None,
                 nugget: float = NUGGET, interpolation_rtol: Optional[float] = INTERPOLATION_RTOL):
        self.X = as_design(X)
        self.n = self.X.shape[0]
        B_cols = _as_outputs(B_cols, self.n)
        w = _as_weights(weights, B_cols.shape[0])
        self.total_weight = float(w.sum())
        if self.total_weight <= 0.0:
            raise DegenerateClusterError("all weights are zero")
        self.scatter = weighted_scatter(B_cols, w)
        self.nugget = nugget
        self.interpolation_rtol = interpolation_rtol
        norms = np.linalg.norm(B_cols, axis=1)
        floor = INTERPOLATION_NODE_FLOOR * norms.max() if norms.size else 0.0
        keep = norms > floor
        self._shapes = B_cols[keep] / norms[keep, None]

    @property
    def zero_energy(self) -> bool:
        return not np.any(self.scatter)

    def energy(self, factorization: CorrelationFactorization) -> float:
        """sum_j w_j b_j^T Phi^{-1} b_j."""
        return max(factorization.trace_solve(self.scatter), 0.0)

    def interpolation_residual(self, factorization: CorrelationFactorization) -> float:
        """max_j nugget * ||Phi^{-1} b_j|| / ||b_j|| over the nonzero output vectors."""
        if self._shapes.shape[0] == 0:
            return 0.0
        coeffs = factorization.solve(self._shapes.T)
        return float(self.nugget * np.sqrt(np.max(np.sum(coeffs * coeffs, axis=0))))

    def admissible(self, theta: np.ndarray) -> bool:
        if self.interpolation_rtol is None:
            return True
        fac = factorize(corr_matrix(self.X, theta, self.nugget), self.nugget)
        return self.interpolation_residual(fac) <= self.interpolation_rtol

    def __call__(self, theta: np.ndarray) -> float:
        fac = factorize(corr_matrix(self.X, theta, self.nugget), self.nugget)
        energy = self.energy(fac)
        if energy <= 0.0:
            return -np.inf
        return fac.log_det + self.n * np.log(energy)

    def log_theta(self, log_theta: np.ndarray) -> float:
        """Objective at exp(log_theta); +inf where theta is not admissible or the factorization fails."""
        theta = np.exp(log_theta)
        try:
            fac = factorize(corr_matrix(self.X, theta, self.nugget), self.nugget)
        except NumericalDegeneracyError:
            return np.inf
        if self.interpolation_rtol is not None and self.interpolation_residual(fac) > self.interpolation_rtol:
            return np.inf
        energy = self.energy(fac)
        if energy <= 0.0:
            return np.inf
        value = fac.log_det + self.n * np.log(energy)
        return value if np.isfinite(value) else np.inf

    def tau_sq(self, theta: np.ndarray) -> float:
        """Closed-form scale at theta."""
        fac = factorize(corr_matrix(self.X, theta, self.nugget), self.nugget)
        return self.energy(fac) / (self.n * self.total_weight)


def weighted_profile_nll(theta: Sequence[float], X: np.ndarray, B_cols: np.ndarray,
                         weights: Optional[np.ndarray] = None, nugget: float = NUGGET) -> float:
    """
    M-step objective log|Phi| + n*log(sum_j w_j b_j^T Phi^{-1} b_j).

    Args:
        theta: Lengthscales
        X: (n, p) design
        B_cols: (m, n) output vectors as rows
        weights: (m,) nonnegative weights, default all ones
        nugget: Diagonal inflation

    Returns:
        Objective value (-inf when every weighted output is zero)

    Raises:
        DegenerateClusterError: If all weights are zero.
    """
    objective = ProfileObjective(X, B_cols, weights, nugget)
    return objective(check_lengthscales(theta, objective.X.shape[1]))


def initial_theta(X: np.ndarray) -> np.ndarray:
    """Per-dimension median of the nonzero pairwise absolute input differences."""
    X = as_design(X)
    theta = np.ones(X.shape[1])
    for i in range(X.shape[1]):
        diffs = pdist(X[:, [i]], "cityblock") if X.shape[0] > 1 else np.empty(0)
        diffs = diffs[diffs > 0.0]
        if diffs.size:
            theta[i] = float(np.median(diffs))
    return theta


def default_bounds(X: np.ndarray) -> Bounds:
    """[1e-2, 1e2] times the per-dimension design range (range 1 when constant)."""
    X = as_design(X)
    span = np.ptp(X, axis=0)
    span = np.where(span > 0.0, span, 1.0)
    low, high = THETA_BOUND_FACTORS
    return low * span, high * span


def optimize_theta(X: np.ndarray, B_cols: np.ndarray, weights: Optional[np.ndarray] = None,
                   init: Optional[Sequence[float]] = None, bounds: Optional[Bounds] = None,
                   seed: int = 0, multistarts: int = MULTISTARTS, max_evals: int = MAX_EVALS,
                   nugget: float = NUGGET) -> np.ndarray:
    """
    Minimizes the weighted profile objective over theta.

    Nelder-Mead in log(theta) from `multistarts` starts: the first is `init`,
    the others are drawn uniformly in log-bounds from a seeded generator.
    Only admissible lengthscales count (see ProfileObjective). The best
    admissible point across all starts is returned, so the result never
    scores worse than an admissible `init`; when nothing evaluated is
    admissible, theta is halved until it is. Optimizer failures fall back
    to the best point.

    Args:
        X: (n, p) design
        B_cols: (m, n) output vectors
        weights: (m,) nonnegative weights
        init: Starting lengthscales (default: median heuristic)
        bounds: (low, high) per dimension (default: default_bounds(X))
        seed: Seed for the extra starts
        multistarts: Number of starts
        max_evals: Objective evaluations per start
        nugget: Diagonal inflation

    Returns:
        Lengthscales inside bounds
    """
    objective = ProfileObjective(X, B_cols, weights, nugget)
    return minimize_profile(objective, init, bounds, seed, multistarts, max_evals)


def minimize_profile(objective: ProfileObjective, init: Optional[Sequence[float]] = None,
                     bounds: Optional[Bounds] = None, seed: int = 0,
                     multistarts: int = MULTISTARTS, max_evals: int = MAX_EVALS) -> np.ndarray:
    """Multistart simplex search on a prepared objective; see optimize_theta."""
    p = objective.X.shape[1]
    low, high = default_bounds(objective.X) if bounds is None else bounds
    low = np.broadcast_to(np.asarray(low, dtype=float), (p,))
    high = np.broadcast_to(np.asarray(high, dtype=float), (p,))
    if np.any(low <= 0.0) or np.any(high < low):
        raise InvalidArgumentError(f"invalid bounds {low}, {high}")
    init = initial_theta(objective.X) if init is None else check_lengthscales(init, p)
    if np.any(init < low) or np.any(init > high):
        raise InvalidArgumentError(f"init {init} outside bounds [{low}, {high}]")

    log_low, log_high = np.log(low), np.log(high)
    best = {"x": np.log(init), "f": objective.log_theta(np.log(init))}

    def tracked(log_theta: np.ndarray) -> float:
        log_theta = np.clip(log_theta, log_low, log_high)
        value = objective.log_theta(log_theta)
        if value < best["f"]:
            best["x"], best["f"] = log_theta.copy(), value
        return value

    rng = np.random.default_rng(seed)
    starts = [np.log(init)] + [rng.uniform(log_low, log_high) for _ in range(max(0, multistarts - 1))]
    for start in starts:
        try:
            minimize(
                tracked, start, method="Nelder-Mead",
                bounds=list(zip(log_low, log_high)),
                options={"maxfev": max_evals, "xatol": SIMPLEX_XATOL, "fatol": SIMPLEX_FATOL},
            )
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            logger.warning("Simplex start failed (%s); keeping best evaluated point", exc)
    if best["f"] == np.inf:
        best["x"] = _shrink_to_admissible(objective, best["x"], log_low)
    return np.exp(best["x"])


def _shrink_to_admissible(objective: ProfileObjective, log_theta: np.ndarray,
                          log_low: np.ndarray) -> np.ndarray:
    """Halves theta until the objective is finite or every dimension sits at its lower bound."""
    while not np.isfinite(objective.log_theta(log_theta)):
        if np.all(log_theta <= log_low):
            logger.warning("No admissible lengthscale found; returning the lower bound")
            break
        log_theta = np.maximum(log_theta - np.log(2.0), log_low)
    return log_theta


def tau_sq_closed_form(X: np.ndarray, theta: Sequence[float], B_cols: np.ndarray,
                       weights: Optional[np.ndarray] = None, nugget: float = NUGGET) -> float:
    """
    Scale estimate (sum_j w_j b_j^T Phi^{-1} b_j) / (n * sum_j w_j).

    Raises:
        DegenerateClusterError: If all weights are zero.
    """
    objective = ProfileObjective(X, B_cols, weights, nugget)
    return objective.tau_sq(check_lengthscales(theta, objective.X.shape[1]))


def fit_gp(X: np.ndarray, theta: Sequence[float], tau_sq: float, nugget: float = NUGGET) -> GpFit:
    """Freezes one GP: validated design, theta and the factorized correlation matrix."""
    X = as_design(X)
    theta = check_lengthscales(theta, X.shape[1])
    return GpFit(theta=theta, tau_sq=float(tau_sq),
                 factorization=factorize(corr_matrix(X, theta, nugget), nugget), design=X)


def kriging_variance(fit: GpFit, cross: np.ndarray) -> np.ndarray:
    """tau^2 (1 - r Phi^{-1} r^T) per row of the (m, n) cross-correlation, clamped at 0."""
    var = fit.tau_sq * (1.0 - fit.factorization.quadratic_form(cross.T))
    var = np.atleast_1d(var)
    if np.any(var < -VARIANCE_ROUNDOFF * max(fit.tau_sq, 1e-300)):
        logger.debug("Kriging variance below round-off band: min %.3e", float(var.min()))
    return np.maximum(var, 0.0)


def gp_posterior(fit: GpFit, b: np.ndarray, x_new: Sequence[float]) -> Tuple[float, float]:
    """
    Kriging mean and variance at one input.

    Args:
        fit: Frozen GP on the design of b
        b: (n,) training outputs
        x_new: Query point in R^p

    Returns:
        Tuple of (mean, variance) with variance clamped at 0
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (fit.design.shape[0],):
        raise InvalidArgumentError(f"b must have length {fit.design.shape[0]}, got {b.shape}")
    cross = cross_corr(np.atleast_1d(np.asarray(x_new, dtype=float))[None, :], fit.design, fit.theta)
    mean = float(cross[0] @ fit.factorization.solve(b))
    variance = float(kriging_variance(fit, cross)[0])
    return mean, variance
