"""
Accuracy and calibration scores for node-coefficient predictions.

CRPS uses the closed forms for Gaussian and Gaussian-mixture forecasts:

    A(mu, s2) = mu (2 Phi(mu/s) - 1) + 2 s phi(mu/s)
    CRPS(F, y) = sum_i w_i A(y - mu_i, s2_i) - 1/2 sum_ij w_i w_j A(mu_i - mu_j, s2_i + s2_j)
"""
import logging
from typing import Union

import numpy as np
from scipy.stats import norm

from config.settings import CRPS_CHUNK_ROWS, TIMING_REPEATS
from src.core.entities.prediction import PredictiveMixture
from src.core.entities.reports import EvalReport
from src.core.exceptions import InvalidArgumentError
from src.core.protocols import MixtureSource
from src.utils.performance import median_time

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _check_same_shape(truth: np.ndarray, pred: np.ndarray):
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if truth.shape != pred.shape:
        raise InvalidArgumentError(f"shape mismatch: truth {truth.shape} vs prediction {pred.shape}")
    if truth.size == 0:
        raise InvalidArgumentError("cannot score an empty prediction")
    return truth, pred


def rmse(truth: np.ndarray, pred: np.ndarray) -> float:
    """Root mean squared error over all entries."""
    truth, pred = _check_same_shape(truth, pred)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def per_node_rmse(truth: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """(N,) RMSE over the test inputs for each node of (m, N) matrices."""
    truth, pred = _check_same_shape(truth, pred)
    return np.sqrt(np.mean((pred - truth) ** 2, axis=0))


def _a_term(mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    """E|Y| for Y ~ N(mu, var), with |mu| at var = 0."""
    sigma = np.sqrt(np.maximum(var, 0.0))
    positive = sigma > 0.0
    z = np.divide(mu, sigma, out=np.zeros_like(mu, dtype=float), where=positive)
    spread = mu * (2.0 * norm.cdf(z) - 1.0) + 2.0 * sigma * norm.pdf(z)
    return np.where(positive, spread, np.abs(mu))


def crps_normal(mu: ArrayLike, sigma: ArrayLike, y: ArrayLike) -> ArrayLike:
    """
    CRPS of N(mu, sigma^2) at observation y (broadcasts over arrays).

    sigma = 0 reduces to |y - mu|.
    """
    mu, sigma, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (mu, sigma, y)))
    if np.any(sigma < 0.0):
        raise InvalidArgumentError("sigma must be nonnegative")
    positive = sigma > 0.0
    z = np.divide(y - mu, sigma, out=np.zeros_like(mu), where=positive)
    score = sigma * (z * (2.0 * norm.cdf(z) - 1.0) + 2.0 * norm.pdf(z) - 1.0 / np.sqrt(np.pi))
    score = np.where(positive, np.maximum(score, 0.0), np.abs(y - mu))
    return float(score) if score.ndim == 0 else score


def crps_mixture(weights: np.ndarray, means: np.ndarray, variances: np.ndarray, y: float) -> float:
    """
    CRPS of a Gaussian mixture at a scalar observation.

    Raises:
        InvalidArgumentError: If weights are negative or do not sum to 1.
    """
    w = np.asarray(weights, dtype=float).ravel()
    mu = np.asarray(means, dtype=float).ravel()
    var = np.asarray(variances, dtype=float).ravel()
    if not (w.shape == mu.shape == var.shape):
        raise InvalidArgumentError("weights, means and variances must have equal length")
    if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-10:
        raise InvalidArgumentError(f"weights must be nonnegative and sum to 1, got sum {w.sum()}")
    if np.any(var < 0.0):
        raise InvalidArgumentError("variances must be nonnegative")
    spread = w @ _a_term(y - mu, var)
    pair = _a_term(mu[:, None] - mu[None, :], var[:, None] + var[None, :])
    return float(max(spread - 0.5 * w @ pair @ w, 0.0))


def crps_grid(mixture: PredictiveMixture, truth: np.ndarray, chunk_rows: int = CRPS_CHUNK_ROWS) -> np.ndarray:
    """
    (m, N) CRPS of every per-node predictive mixture against (m, N) truth.

    Pairwise component terms are evaluated `chunk_rows` test inputs at a time.
    """
    truth = np.asarray(truth, dtype=float)
    m, N, K = mixture.means.shape
    if truth.shape != (m, N):
        raise InvalidArgumentError(f"truth must be {m} x {N}, got {truth.shape}")
    w = mixture.weights
    if K == 1:
        return crps_normal(mixture.means[..., 0], np.sqrt(np.maximum(mixture.variances[..., 0], 0.0)), truth)

    out = np.empty((m, N))
    ww = w[:, :, None] * w[:, None, :]                           # (N, K, K)
    for start in range(0, m, max(1, chunk_rows)):
        stop = min(start + chunk_rows, m)
        mu = mixture.means[start:stop]
        var = mixture.variances[start:stop]
        spread = np.sum(w[None] * _a_term(truth[start:stop, :, None] - mu, var), axis=2)
        pair = _a_term(mu[..., :, None] - mu[..., None, :], var[..., :, None] + var[..., None, :])
        out[start:stop] = spread - 0.5 * np.sum(ww[None] * pair, axis=(2, 3))
    return np.maximum(out, 0.0)


def evaluate_model(model: MixtureSource, X_test: np.ndarray, truth: np.ndarray, fit_seconds: float = 0.0,
                   repeats: int = TIMING_REPEATS, per_node: bool = False) -> EvalReport:
    """
    RMSE, mean CRPS and prediction latency of a fitted emulator.

    Args:
        model: Fitted emulator
        X_test: (m, p) test inputs
        truth: (m, N) true node coefficients (row per test input)
        fit_seconds: Measured fitting time to report alongside
        repeats: Timing repeats (median reported)
        per_node: Also report per-node RMSE

    Returns:
        EvalReport; CRPS is averaged over all (test input, node) pairs
    """
    X_test = np.asarray(X_test, dtype=float)
    truth = np.asarray(truth, dtype=float)
    seconds, (means, _) = median_time(lambda: model.predict_all_nodes(X_test), repeats)
    n_test = means.shape[0]
    scores = crps_grid(model.predictive_components(X_test), truth)
    report = EvalReport(
        model_type=model.model_type,
        rmse=rmse(truth, means),
        mean_crps=float(scores.mean()),
        fit_seconds=float(fit_seconds),
        predict_ms_per_run=1000.0 * seconds / max(n_test, 1),
        n_test=n_test,
        per_node_rmse=per_node_rmse(truth, means) if per_node else None,
    )
    logger.info("%s: RMSE %.4e, mean CRPS %.4e over %d test inputs",
                report.model_type, report.rmse, report.mean_crps, n_test)
    return report
