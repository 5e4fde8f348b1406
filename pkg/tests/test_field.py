"""
Unit Tests for spatial field prediction through the shape functions.

Run with: python -m pytest tests/test_field.py -v
"""
import unittest
import sys
import os

import numpy as np
from numpy.testing import assert_allclose

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.exceptions import InvalidArgumentError, OutOfDomainError
from src.emulators.field import predict_field, predict_field_batch
from src.fem.mesh import build_mesh
from src.fem.shape import shape_values
from tests.helpers import NodeFunctionModel


def _field(s, x):
    return x * s[..., 0] + s[..., 1] ** 2


class TestPredictField(unittest.TestCase):
    """Test single-point and batched field predictions."""

    def setUp(self):
        self.mesh = build_mesh(0.5)
        self.model = NodeFunctionModel(self.mesh.nodes, _field, variance=0.04)

    def test_node_value(self):
        node = self.mesh.nodes[7]
        mean, var = predict_field(self.model, self.mesh, node, 0.3)
        self.assertAlmostEqual(mean, float(_field(node, 0.3)), places=12)
        # Only one shape function is nonzero at a node
        self.assertAlmostEqual(var, 0.04, places=12)

    def test_quadratic_field_reproduced(self):
        s = np.array([0.37, 0.61])
        mean, _ = predict_field(self.model, self.mesh, s, -0.8)
        self.assertAlmostEqual(mean, float(_field(s, -0.8)), places=12)

    def test_variance_uses_squared_weights(self):
        s = np.array([0.1, 0.3])
        _, var = predict_field(self.model, self.mesh, s, 0.0)
        _, xi = self.mesh.locate(s)
        v = shape_values(xi)
        self.assertAlmostEqual(var, 0.04 * float(np.sum(v * v)), places=12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(4)
        points = rng.uniform(0.0, 1.0, size=(6, 2))
        inputs = rng.uniform(-1.0, 1.0, size=(6, 1))
        means, variances = predict_field_batch(self.model, self.mesh, points, inputs)
        for i in range(6):
            mean, var = predict_field(self.model, self.mesh, points[i], inputs[i])
            self.assertAlmostEqual(means[i], mean, places=12)
            self.assertAlmostEqual(variances[i], var, places=12)

    def test_empty_batch(self):
        means, variances = predict_field_batch(self.model, self.mesh, np.zeros((0, 2)), np.zeros((0, 1)))
        self.assertEqual(means.shape, (0,))
        self.assertEqual(variances.shape, (0,))

    def test_one_dimensional_inputs(self):
        points = np.array([[0.2, 0.2], [0.8, 0.4]])
        means, _ = predict_field_batch(self.model, self.mesh, points, np.array([0.5, -0.5]))
        assert_allclose(means, _field(points, np.array([0.5, -0.5])), atol=1e-12)


class TestFieldValidation(unittest.TestCase):
    """Test error handling."""

    def setUp(self):
        self.mesh = build_mesh(0.5)

    def test_mesh_mismatch(self):
        model = NodeFunctionModel(build_mesh(0.25).nodes, _field)
        with self.assertRaises(InvalidArgumentError):
            predict_field(model, self.mesh, np.array([0.5, 0.5]), 0.0)

    def test_point_count_mismatch(self):
        model = NodeFunctionModel(self.mesh.nodes, _field)
        with self.assertRaises(InvalidArgumentError):
            predict_field_batch(model, self.mesh, np.zeros((3, 2)) + 0.5, np.zeros((2, 1)))

    def test_outside_domain(self):
        model = NodeFunctionModel(self.mesh.nodes, _field)
        with self.assertRaises(OutOfDomainError):
            predict_field(model, self.mesh, np.array([1.5, 0.5]), 0.0)


if __name__ == '__main__':
    unittest.main()
