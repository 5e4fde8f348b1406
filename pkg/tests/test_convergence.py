"""
Unit Tests for the convergence regression, the Monte Carlo field error and
the convergence study driver.

Run with: python -m pytest tests/test_convergence.py -v
"""
import unittest
import sys
import os
import itertools

import numpy as np
from numpy.testing import assert_allclose

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.convergence_study import ConvergenceStudy, design_inputs, fem_l2_error
from src.core.exceptions import DegenerateRegressionError, InvalidArgumentError
from src.fem.dataset import generate_dataset
from src.fem.mesh import build_mesh
from src.fem.poisson import analytic_solution
from src.metrics.convergence import convergence_regression, monte_carlo_l2_error, sample_space_input
from tests.helpers import NodeFunctionModel


def _quadratic(s, x):
    return x * (s[..., 0] ** 2 + s[..., 1]) + 0.5 * s[..., 0] * s[..., 1]


class TestConvergenceRegression(unittest.TestCase):
    """Test the rate search."""

    def setUp(self):
        grid = list(itertools.product([0.5, 0.25, 0.125, 0.0625], [0.4, 0.2, 0.1]))
        self.h_x = np.array([g[0] for g in grid])
        self.h_t = np.array([g[1] for g in grid])

    def test_recovers_synthetic_rates(self):
        errors = 0.01 * self.h_x ** 3 + 0.1 * self.h_t ** 3
        result = convergence_regression(self.h_x, self.h_t, errors)
        self.assertEqual(result.nu, 3)
        self.assertEqual(result.r, 2)
        self.assertAlmostEqual(result.a, 0.01, places=10)
        self.assertAlmostEqual(result.b, 0.1, places=10)
        self.assertAlmostEqual(result.r_squared, 1.0, places=10)

    def test_rates_survive_relative_noise(self):
        rng = np.random.default_rng(8)
        errors = (0.01 * self.h_x ** 3 + 0.1 * self.h_t ** 3) * (1.0 + 0.05 * rng.standard_normal(12))
        result = convergence_regression(self.h_x, self.h_t, errors)
        self.assertEqual((result.nu, result.r), (3, 2))

    def test_custom_grids(self):
        errors = 2.0 * self.h_x + 0.5 * self.h_t ** 2
        result = convergence_regression(self.h_x, self.h_t, errors, nu_grid=(1, 2), r_grid=(0, 1))
        self.assertEqual((result.nu, result.r), (1, 1))
        self.assertEqual(sorted(result.to_dict()), ["a", "b", "nu", "r", "r_squared"])

    def test_all_zero_errors(self):
        with self.assertRaises(DegenerateRegressionError):
            convergence_regression(self.h_x, self.h_t, np.zeros(12))

    def test_too_few_points(self):
        with self.assertRaises(InvalidArgumentError):
            convergence_regression([0.5, 0.25, 0.1], [0.1, 0.1, 0.1], [1.0, 0.5, 0.2])

    def test_negative_error(self):
        errors = np.full(12, 0.1)
        errors[3] = -0.1
        with self.assertRaises(InvalidArgumentError):
            convergence_regression(self.h_x, self.h_t, errors)

    def test_length_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            convergence_regression(self.h_x, self.h_t[:-1], np.ones(12))


class TestMonteCarloError(unittest.TestCase):
    """Test the space x input L2 error estimate."""

    def setUp(self):
        self.mesh = build_mesh(0.5)

    def test_zero_for_exactly_represented_field(self):
        model = NodeFunctionModel(self.mesh.nodes, _quadratic)
        error = monte_carlo_l2_error(model, self.mesh, samples=300, seed=1,
                                     exact=lambda s, x: _quadratic(s, x[:, 0]))
        self.assertLess(error, 1e-12)

    def test_matches_direct_sample_average(self):
        model = NodeFunctionModel(self.mesh.nodes, _quadratic)
        error = monte_carlo_l2_error(model, self.mesh, samples=400, seed=5,
                                     exact=lambda s, x: np.zeros(s.shape[0]))
        points, inputs = sample_space_input(400, 5)
        expected = np.sqrt(2.0 * np.mean(_quadratic(points, inputs[:, 0]) ** 2))
        self.assertAlmostEqual(error, expected, places=12)

    def test_samples_are_seeded(self):
        a = sample_space_input(10, 3)
        b = sample_space_input(10, 3)
        assert_allclose(a[0], b[0])
        assert_allclose(a[1], b[1])
        self.assertTrue(np.all((a[1] >= -1.0) & (a[1] <= 1.0)))

    def test_rejects_nonpositive_samples(self):
        model = NodeFunctionModel(self.mesh.nodes, _quadratic)
        with self.assertRaises(InvalidArgumentError):
            monte_carlo_l2_error(model, self.mesh, samples=0)


class TestConvergenceStudy(unittest.TestCase):
    """Run the study with an injected fitter that reproduces the analytic nodes."""

    def test_grid_and_regression(self):
        def fitter(model_type, B, X, S, config):
            return NodeFunctionModel(S, lambda s, x: analytic_solution(s, x))

        study = ConvergenceStudy(design_sizes=(3, 5), mesh_sizes=(0.5, 0.25), model_type="mcgp",
                                 mc_samples=300, seed=2, fitter=fitter)
        report = study.run()
        self.assertEqual(len(report.cells), 4)
        grid = report.grid()
        assert_allclose(sorted(set(grid[:, 0])), [0.5, 1.0])
        assert_allclose(sorted(set(grid[:, 1])), [0.25, 0.5])
        self.assertTrue(np.all(grid[:, 2] > 0.0))
        # Interpolation error shrinks with the mesh
        coarse = [c.error for c in report.cells if c.h == 0.5]
        fine = [c.error for c in report.cells if c.h == 0.25]
        self.assertLess(max(fine), min(coarse))
        self.assertIsNotNone(report.regression)
        self.assertEqual(len(report.to_dict()["cells"]), 4)

    def test_needs_four_cells(self):
        with self.assertRaises(InvalidArgumentError):
            ConvergenceStudy(design_sizes=(5,), mesh_sizes=(0.5, 0.25))

    def test_design_inputs_include_ends(self):
        assert_allclose(design_inputs(5)[:, 0], [-1.0, -0.5, 0.0, 0.5, 1.0])
        with self.assertRaises(InvalidArgumentError):
            design_inputs(1)

    def test_fem_error_decreases(self):
        coarse = fem_l2_error(generate_dataset(0.5, [-0.5, 0.5]))
        fine = fem_l2_error(generate_dataset(0.25, [-0.5, 0.5]))
        self.assertGreater(coarse, fine)
        self.assertGreater(fine, 0.0)


@unittest.skipUnless(os.environ.get("MCGP_SLOW_TESTS"), "full convergence grid; set MCGP_SLOW_TESTS=1")
class TestFullConvergenceGrid(unittest.TestCase):
    """The mcGP pipeline over the default design and mesh grids."""

    def test_recovers_rates(self):
        report = ConvergenceStudy(model_type="mcgp", seed=0).run()
        result = report.regression
        self.assertEqual((result.nu, result.r), (3, 2))
        self.assertGreater(result.a, 0.0044 / 10.0)
        self.assertLess(result.a, 0.0044 * 10.0)
        self.assertGreater(result.b, 0.1453 / 10.0)
        self.assertLess(result.b, 0.1453 * 10.0)


if __name__ == '__main__':
    unittest.main()
