"""
Custom exception hierarchy for the mesh-clustered GP emulator.

Provides semantic error types instead of generic Python exceptions, so the
CLI can map every failure family onto a stable exit code.
"""
from typing import Optional


class MeshClusterError(Exception):
    """Base exception for the emulator toolkit."""


class InvalidArgumentError(MeshClusterError, ValueError):
    """Non-finite input, wrong shape or out-of-range parameter."""


class ValidationError(MeshClusterError):
    """A dataset or input file is inconsistent with the others."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class NumericalDegeneracyError(MeshClusterError):
    """Factorization failure or non-finite objective term."""

    def __init__(self, message: str, pivot: Optional[int] = None, term: Optional[str] = None):
        self.pivot = pivot
        self.term = term
        super().__init__(message)


class DegenerateClusterError(NumericalDegeneracyError):
    """A cluster carries no responsibility mass."""


class DegenerateRegressionError(NumericalDegeneracyError):
    """Convergence regression on an all-zero error grid."""


class MeshValidityError(MeshClusterError):
    """Zero-area element or singular FEM system."""


class OutOfDomainError(MeshClusterError):
    """Query point lies outside every mesh element."""

    def __init__(self, message: str, nearest_element: Optional[int] = None):
        self.nearest_element = nearest_element
        super().__init__(message)


class ModelLoadError(MeshClusterError):
    """Saved model files are malformed, truncated or of another version."""


class EmulatorNotFoundError(MeshClusterError):
    """Requested emulator type is not registered."""
