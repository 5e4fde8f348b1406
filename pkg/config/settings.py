import os
from typing import Any


# --- 0. HELPER FUNCTIONS ---
def _get_env(key: str, default: Any, cast_type=str) -> Any:
    """Get environment variable with type casting and fallback."""
    value = os.environ.get(key)
    if value is None:
        return default
    try:
        return cast_type(value)
    except (ValueError, TypeError):
        return default


def _parse_bool(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


# --- 1. PATH CONFIGURATION ---
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Empty string disables the file handler (stream logging only)
LOGS_DIR = _get_env("MCGP_LOG_DIR", "")
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"

# --- 2. KERNEL ---
NUGGET = _get_env("MCGP_NUGGET", 1.5e-8, float)   # Diagonal inflation of every correlation matrix
VARIANCE_ROUNDOFF = 1e-12                         # Negative variances above -VARIANCE_ROUNDOFF*tau^2 are round-off

# --- 3. HYPERPARAMETER OPTIMIZER ---
MULTISTARTS = _get_env("MCGP_MULTISTARTS", 5, int)  # First start is always the current theta
MAX_EVALS = _get_env("MCGP_MAX_EVALS", 200, int)    # Objective evaluations per start
THETA_BOUND_FACTORS = (1e-2, 1e2)                   # Multiplies the per-dimension design range
SIMPLEX_XATOL = 1e-4                                # In log(theta)
SIMPLEX_FATOL = 1e-9
INTERPOLATION_RTOL = 5e-6                           # Max nugget * ||Phi^-1 b_j|| / ||b_j|| at an admissible theta
INTERPOLATION_NODE_FLOOR = 1e-10                    # Outputs below this fraction of the largest norm are skipped

# --- 4. VARIATIONAL EM ---
TRUNCATION_LEVEL = _get_env("MCGP_K", 10, int)
ALPHA0 = _get_env("MCGP_ALPHA0", 0.5, float)        # Stick-breaking concentration
ELBO_TOL = _get_env("MCGP_ELBO_TOL", 1e-6, float)   # Relative change
MAX_ITER = _get_env("MCGP_MAX_ITER", 200, int)
MONOTONE_SLACK = 1e-8                               # Relative ELBO drop tolerated before warning
EPS_ACTIVE = 1e-8                                   # Minimum total responsibility for an M-step
ACTIVE_DISPLAY_THRESHOLD = 1e-3                     # max_j q(z_j=k) for reporting a cluster
INIT_ASSIGNED_WEIGHT = 0.9                          # Softened k-means start
INIT_CLUSTERS = _get_env("MCGP_INIT_CLUSTERS", 4, int)  # Occupied clusters at the start; the rest start empty
KMEANS_N_INIT = 10
TAU_SQ_FLOOR = _get_env("MCGP_TAU_SQ_FLOOR", 1e-200, float)  # Scale of zero-energy clusters
COVARIANCE_JITTER = 1e-8                            # Times trace/d, singular node covariance
LITERAL_TAU_EXPONENT = _get_env("MCGP_LITERAL_TAU_EXPONENT", False, _parse_bool)
SEED = _get_env("MCGP_SEED", 0, int)

# --- 5. FEM DATA GENERATOR ---
DEFAULT_MESH_SIZE = 0.2
DEFAULT_TRAIN_SIZE = 5
DEFAULT_TEST_SIZE = 201
INPUT_RANGE = (-1.0, 1.0)

# --- 6. EVALUATION ---
PCA_VARIANCE_THRESHOLD = 0.99
TIMING_REPEATS = 3
CRPS_CHUNK_ROWS = 16                                # Test inputs per CRPS batch
MC_SAMPLES = _get_env("MCGP_MC_SAMPLES", 2000, int)
CONVERGENCE_DESIGN_SIZES = (5, 10, 15, 20, 25)
CONVERGENCE_MESH_SIZES = (0.4, 0.2, 0.1, 0.05, 0.025)
NU_GRID = (1, 2, 3, 4, 5, 6)
R_GRID = (0, 1, 2, 3, 4, 5)

# --- 7. PARALLELISM ---
THREADS = _get_env("MCGP_THREADS", os.cpu_count() or 1, int)

# --- 8. FILE FORMATS ---
FLOAT_FORMAT = "%.17g"
MODEL_FORMAT_VERSION = 1
GENERATOR_VERSION = "1.0"
