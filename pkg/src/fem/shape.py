"""
Quadratic shape functions on 6-node triangles.

In barycentric coordinates xi the vertex functions are xi_i (2 xi_i - 1) and
the midside functions are 4 xi_i xi_j, ordered (1,2), (2,3), (1,3).
"""
from typing import Tuple

import numpy as np

from src.core.exceptions import InvalidArgumentError
from src.utils.geometry import barycentric_at, barycentric_coefficients

# Barycentric index pairs of the midside nodes
MIDSIDE_PAIRS = ((0, 1), (1, 2), (0, 2))


def shape_values(xi: np.ndarray) -> np.ndarray:
    """(..., 3) barycentric coordinates -> (..., 6) shape-function values."""
    xi = np.asarray(xi, dtype=float)
    vertex = xi * (2.0 * xi - 1.0)
    midside = np.stack([4.0 * xi[..., i] * xi[..., j] for i, j in MIDSIDE_PAIRS], axis=-1)
    return np.concatenate([vertex, midside], axis=-1)


def shape_derivatives(xi: np.ndarray) -> np.ndarray:
    """(..., 3) barycentric coordinates -> (..., 6, 3) derivatives d v_k / d xi_i."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape[:-1] + (6, 3))
    for i in range(3):
        out[..., i, i] = 4.0 * xi[..., i] - 1.0
    for k, (i, j) in enumerate(MIDSIDE_PAIRS):
        out[..., 3 + k, i] = 4.0 * xi[..., j]
        out[..., 3 + k, j] = 4.0 * xi[..., i]
    return out


def shape_functions(vertices: np.ndarray, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Values and gradients of the six shape functions of one element at s.

    Args:
        vertices: (3, 2) counter-clockwise vertex coordinates
        s: Point inside or on the element

    Returns:
        Tuple of (values (6,), gradients (6, 2))

    Raises:
        MeshValidityError: If the element has zero area.
        InvalidArgumentError: If s lies outside the element.
    """
    vertices = np.asarray(vertices, dtype=float).reshape(1, 3, 2)
    a, b, c, _ = barycentric_coefficients(vertices)
    xi = barycentric_at(a[0], b[0], c[0], np.asarray(s, dtype=float).reshape(2))
    if xi.min() < -1e-10:
        raise InvalidArgumentError(f"point {np.asarray(s).tolist()} lies outside the element")
    grad_xi = np.stack([b[0], c[0]], axis=-1)                # (3, 2)
    return shape_values(xi), shape_derivatives(xi) @ grad_xi
