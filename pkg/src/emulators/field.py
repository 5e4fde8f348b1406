"""
Spatial field prediction: node-coefficient predictions pushed through the
quadratic shape functions of the element containing each query point.

Node coefficients are treated as independent, so the field variance is the
shape-weighted sum of node variances with squared weights.
"""
from typing import Tuple

import numpy as np

from src.core.exceptions import InvalidArgumentError
from src.core.protocols import NodeMomentSource
from src.fem.mesh import TriMesh
from src.fem.shape import shape_values


def _check_mesh(model: NodeMomentSource, mesh: TriMesh) -> None:
    if model.n_nodes != mesh.n_nodes:
        raise InvalidArgumentError(f"model has {model.n_nodes} nodes but the mesh has {mesh.n_nodes}")


def predict_field(model: NodeMomentSource, mesh: TriMesh, s: np.ndarray, x: np.ndarray) -> Tuple[float, float]:
    """
    Predictive mean and variance of the field at point s and input x.

    Raises:
        OutOfDomainError: If s is outside the mesh.
    """
    _check_mesh(model, mesh)
    element, xi = mesh.locate(s)
    v = shape_values(xi)
    means, variances = model.node_moments(np.atleast_2d(np.asarray(x, dtype=float)), mesh.elements[element])
    return float(means[0] @ v), float(variances[0] @ (v * v))


def predict_field_batch(model: NodeMomentSource, mesh: TriMesh, points: np.ndarray,
                        inputs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Field predictions for paired (s_i, x_i) queries.

    Args:
        model: Fitted emulator
        mesh: Mesh the model was trained on
        points: (M, 2) spatial points
        inputs: (M, p) inputs, one per point

    Returns:
        Tuple of (M,) means and (M,) variances
    """
    _check_mesh(model, mesh)
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs.reshape(points.shape[0], -1)
    if inputs.shape[0] != points.shape[0]:
        raise InvalidArgumentError(f"{points.shape[0]} points but {inputs.shape[0]} inputs")
    if points.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    elements, xi = mesh.locate_many(points)
    v = shape_values(xi)                                     # (M, 6)
    means, variances = model.node_moments(inputs, mesh.elements[elements])
    return np.einsum("mk,mk->m", means, v), np.einsum("mk,mk->m", variances, v * v)
