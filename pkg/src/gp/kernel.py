"""
Anisotropic Matern-5/2 correlation, correlation-matrix assembly and
Cholesky-based solves shared by every GP fit.

The smoothness is fixed at 5/2 so the closed form
    (1 + sqrt(5) t + 5/3 t^2) exp(-sqrt(5) t)
replaces the Bessel-function expression, with
    t^2 = sum_i ((x_i - x'_i) / theta_i)^2.
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular

from config.settings import NUGGET
from src.core.exceptions import InvalidArgumentError, NumericalDegeneracyError

ArrayLike = Union[np.ndarray, Sequence[float]]

_SQRT5 = np.sqrt(5.0)


def check_lengthscales(theta: ArrayLike, p: int) -> np.ndarray:
    """Validates theta against the input dimension and returns it as a float array."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.ndim != 1 or theta.shape[0] != p:
        raise InvalidArgumentError(f"theta must have length {p}, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)) or np.any(theta <= 0.0):
        raise InvalidArgumentError(f"theta must be positive and finite, got {theta}")
    return theta


def as_design(X: ArrayLike) -> np.ndarray:
    """Coerces a design to a finite (n, p) float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidArgumentError(f"design must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("design contains non-finite values")
    return X


def matern52_from_distance(t: np.ndarray) -> np.ndarray:
    """Matern-5/2 correlation as a function of the scaled distance t >= 0."""
    st = _SQRT5 * t
    return (1.0 + st + (5.0 / 3.0) * t * t) * np.exp(-st)


def scaled_distance(X1: np.ndarray, X2: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Pairwise ||x1 - x2||_theta; per-dimension scaling before summation."""
    sq = np.zeros((X1.shape[0], X2.shape[0]))
    for i in range(X1.shape[1]):
        diff = (X1[:, i, None] - X2[None, :, i]) / theta[i]
        sq += diff * diff
    return np.sqrt(sq)


def matern52(x1: ArrayLike, x2: ArrayLike, theta: ArrayLike) -> float:
    """
    Correlation between two input points.

    Args:
        x1: Point in R^p
        x2: Point in R^p
        theta: Lengthscales (length p)

    Returns:
        Correlation in (0, 1]

    Raises:
        InvalidArgumentError: On non-finite points or invalid theta.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape or x1.ndim != 1:
        raise InvalidArgumentError(f"points must share one dimension, got {x1.shape} and {x2.shape}")
    if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
        raise InvalidArgumentError("points must be finite")
    theta = check_lengthscales(theta, x1.shape[0])
    z = (x1 - x2) / theta
    return float(matern52_from_distance(np.sqrt(np.sum(z * z))))


def cross_corr(X_new: ArrayLike, X: ArrayLike, theta: ArrayLike) -> np.ndarray:
    """(m, n) correlations between query points and the design (no nugget)."""
    X_new = as_design(X_new)
    X = as_design(X)
    theta = check_lengthscales(theta, X.shape[1])
    if X_new.shape[1] != X.shape[1]:
        raise InvalidArgumentError(f"query dimension {X_new.shape[1]} != design dimension {X.shape[1]}")
    return matern52_from_distance(scaled_distance(X_new, X, theta))


def corr_matrix(X: ArrayLike, theta: ArrayLike, nugget: float = NUGGET) -> np.ndarray:
    """
    Correlation matrix of a design with the nugget on the diagonal.

    Rows need not be distinct; the nugget keeps the matrix positive definite.
    The upper triangle is mirrored so the result is exactly symmetric.
    """
    if not (np.isfinite(nugget) and nugget > 0.0):
        raise InvalidArgumentError(f"nugget must be positive, got {nugget}")
    X = as_design(X)
    theta = check_lengthscales(theta, X.shape[1])
    R = matern52_from_distance(scaled_distance(X, X, theta))
    R = np.triu(R, 1)
    R = R + R.T
    R[np.diag_indices_from(R)] = 1.0 + nugget
    return R


@dataclass(frozen=True)
class CorrelationFactorization:
    """
    Lower Cholesky factor of an SPD matrix with its log-determinant.

    Immutable; safe to share between threads.
    """
    lower: np.ndarray
    log_det: float
    nugget: float = NUGGET

    @property
    def matrix_dim(self) -> int:
        return self.lower.shape[0]

    def solve(self, v: np.ndarray) -> np.ndarray:
        """M^{-1} v for a vector or a matrix of columns."""
        return cho_solve((self.lower, True), v, check_finite=False)

    def quadratic_form(self, v: np.ndarray) -> Union[float, np.ndarray]:
        """v^T M^{-1} v; column-wise when v is (n, m)."""
        w = solve_triangular(self.lower, v, lower=True, check_finite=False)
        if w.ndim == 1:
            return float(w @ w)
        return np.einsum("ij,ij->j", w, w)

    def trace_solve(self, S: np.ndarray) -> float:
        """tr(M^{-1} S) for a square S."""
        return float(np.trace(self.solve(S)))


def factorize(M: np.ndarray, nugget: float = NUGGET) -> CorrelationFactorization:
    """
    Cholesky factorization of a symmetric positive-definite matrix.

    Args:
        M: (n, n) symmetric matrix, nugget already applied
        nugget: Recorded on the result for cache consistency checks

    Returns:
        CorrelationFactorization

    Raises:
        NumericalDegeneracyError: If M is not positive definite; `pivot`
            holds the 0-based index of the failing leading minor.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("matrix contains non-finite values")
    lower, info = lapack.dpotrf(M, lower=1, clean=1)
    if info > 0:
        raise NumericalDegeneracyError(
            f"Cholesky factorization failed at pivot {info - 1}", pivot=int(info - 1)
        )
    if info < 0:
        raise InvalidArgumentError(f"dpotrf rejected argument {-info}")
    log_det = 2.0 * float(np.sum(np.log(np.diag(lower))))
    return CorrelationFactorization(lower=lower, log_det=log_det, nugget=nugget)
