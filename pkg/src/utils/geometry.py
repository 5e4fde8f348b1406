"""
Triangle geometry helpers shared by the FEM assembly and the point locator.
"""
from typing import Tuple

import numpy as np

from src.core.exceptions import MeshValidityError


def signed_areas(vertices: np.ndarray) -> np.ndarray:
    """
    Signed area of each triangle (positive when counter-clockwise).

    Args:
        vertices: (..., 3, 2) array of vertex coordinates

    Returns:
        (...) array of signed areas
    """
    p1, p2, p3 = vertices[..., 0, :], vertices[..., 1, :], vertices[..., 2, :]
    cross = (p2[..., 0] - p1[..., 0]) * (p3[..., 1] - p1[..., 1]) \
        - (p3[..., 0] - p1[..., 0]) * (p2[..., 1] - p1[..., 1])
    return 0.5 * cross


def barycentric_coefficients(vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Coefficients of xi_j(s) = a_j + b_j*s1 + c_j*s2 for every triangle.

    Args:
        vertices: (E, 3, 2) array of vertex coordinates

    Returns:
        (a, b, c, area): three (E, 3) arrays and the (E,) signed areas

    Raises:
        MeshValidityError: If any triangle has zero area.
    """
    vertices = np.asarray(vertices, dtype=float)
    area = signed_areas(vertices)
    if np.any(area == 0.0) or not np.all(np.isfinite(area)):
        bad = int(np.flatnonzero(~(np.abs(area) > 0.0))[0])
        raise MeshValidityError(f"Element {bad} has zero area")

    x = vertices[..., 0]
    y = vertices[..., 1]
    # Cyclic (j, k, l) = (0, 1, 2), (1, 2, 0), (2, 0, 1)
    xk, xl = np.roll(x, -1, axis=-1), np.roll(x, -2, axis=-1)
    yk, yl = np.roll(y, -1, axis=-1), np.roll(y, -2, axis=-1)
    twice = (2.0 * area)[..., None]
    a = (xk * yl - xl * yk) / twice
    b = (yk - yl) / twice
    c = (xl - xk) / twice
    return a, b, c, area


def barycentric_at(a: np.ndarray, b: np.ndarray, c: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluates xi_j at points; coefficient rows broadcast against point rows."""
    points = np.asarray(points, dtype=float)
    return a + b * points[..., 0:1] + c * points[..., 1:2]
