"""
Unit Tests for the quadratic shape functions.

Tests:
- Kronecker property at the six element nodes
- Partition of unity and zero-sum gradients
- Exact reproduction of quadratic polynomials and their gradients

Run with: python -m pytest tests/test_fem_shape.py -v
"""
import unittest
import sys
import os

import numpy as np
from numpy.testing import assert_allclose

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.exceptions import InvalidArgumentError, MeshValidityError
from src.fem.shape import MIDSIDE_PAIRS, shape_functions, shape_values

VERTICES = np.array([[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]])


def _element_nodes(vertices: np.ndarray) -> np.ndarray:
    mids = [(vertices[i] + vertices[j]) / 2 for i, j in MIDSIDE_PAIRS]
    return np.vstack([vertices, mids])


class TestShapeValues(unittest.TestCase):
    """Test the reference shape functions."""

    def test_kronecker_at_nodes(self):
        for k, s in enumerate(_element_nodes(VERTICES)):
            values, _ = shape_functions(VERTICES, s)
            expected = np.zeros(6)
            expected[k] = 1.0
            assert_allclose(values, expected, atol=1e-12)

    def test_partition_of_unity(self):
        rng = np.random.default_rng(0)
        xi = rng.dirichlet(np.ones(3), size=20)
        assert_allclose(shape_values(xi).sum(axis=1), 1.0, atol=1e-14)

    def test_gradients_sum_to_zero(self):
        _, grads = shape_functions(VERTICES, np.array([0.5, 0.4]))
        assert_allclose(grads.sum(axis=0), 0.0, atol=1e-12)


class TestQuadraticExactness(unittest.TestCase):
    """Interpolation at the six nodes reproduces any quadratic."""

    @staticmethod
    def poly(s):
        return 1.0 - 2.0 * s[..., 0] + 0.5 * s[..., 1] + 3.0 * s[..., 0] ** 2 \
            - s[..., 0] * s[..., 1] + 2.0 * s[..., 1] ** 2

    @staticmethod
    def grad(s):
        return np.array([-2.0 + 6.0 * s[0] - s[1], 0.5 - s[0] + 4.0 * s[1]])

    def test_values_and_gradients(self):
        nodal = self.poly(_element_nodes(VERTICES))
        rng = np.random.default_rng(1)
        for xi in rng.dirichlet(np.ones(3), size=10):
            s = xi @ VERTICES
            values, grads = shape_functions(VERTICES, s)
            self.assertAlmostEqual(float(values @ nodal), float(self.poly(s)), places=12)
            assert_allclose(grads.T @ nodal, self.grad(s), atol=1e-11)


class TestShapeValidation(unittest.TestCase):
    """Test error handling."""

    def test_point_outside_element(self):
        with self.assertRaises(InvalidArgumentError):
            shape_functions(VERTICES, np.array([0.0, 0.0]))

    def test_degenerate_element(self):
        flat = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        with self.assertRaises(MeshValidityError):
            shape_functions(flat, np.array([0.5, 0.0]))


if __name__ == '__main__':
    unittest.main()
