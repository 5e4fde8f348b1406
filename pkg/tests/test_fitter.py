"""
Unit Tests for the variational EM driver.

Tests:
- ELBO trace is non-decreasing up to round-off, on FEM data and seeded random data
- The monotone flag records any drop
- Convergence flag and iteration cap
- Seeded fits are reproducible
- Output-scale start occupies only the first few clusters
- Two-regime data separates into clusters
- Per-iteration cost against the node count

Run with: python -m pytest tests/test_fitter.py -v
"""
import unittest
import sys
import os
from unittest.mock import patch

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import MONOTONE_SLACK
from src.core.exceptions import InvalidArgumentError
from src.core.fit_options import FitOptions
from src.mixture.fitter import (
    check_training_data, initial_hypers, initial_responsibilities, output_scales, run_variational_em,
)
from src.gp.gp_core import ProfileObjective
from src.mixture.updates import default_priors
from src.fem.dataset import generate_dataset, training_inputs
from src.utils.performance import median_time
from tests.helpers import gp_draws, grid_nodes, rough_problem, small_problem, two_regime_coefficients


def _assert_non_decreasing(test, trace):
    trace = np.asarray(trace)
    slack = MONOTONE_SLACK * np.maximum(np.abs(trace[:-1]), 1.0)
    test.assertTrue(np.all(np.diff(trace) >= -slack), msg=f"trace {trace}")


class TestRunVariationalEM(unittest.TestCase):
    """Test the EM loop on a small smooth problem."""

    @classmethod
    def setUpClass(cls):
        cls.B, cls.X, cls.S = small_problem(side=6, n=5)
        cls.priors = default_priors(cls.S, K=3)
        cls.options = FitOptions(max_iter=12, multistarts=2, max_evals=60)
        cls.result = run_variational_em(cls.B, cls.X, cls.S, cls.priors, cls.options)

    def test_elbo_never_drops(self):
        _assert_non_decreasing(self, self.result.elbo_trace)
        self.assertTrue(self.result.monotone)

    def test_responsibilities_are_stochastic(self):
        R = self.result.state.responsibilities
        self.assertEqual(R.shape, (36, 3))
        assert_allclose(R.sum(axis=1), 1.0, atol=1e-10)

    def test_hypers_per_cluster(self):
        self.assertEqual(len(self.result.hypers), 3)
        for h in self.result.hypers:
            self.assertTrue(np.all(h.theta > 0.0))
            self.assertGreater(h.tau_sq, 0.0)

    def test_reproducible_with_same_seed(self):
        again = run_variational_em(self.B, self.X, self.S, self.priors, self.options)
        assert_allclose(again.elbo_trace, self.result.elbo_trace, rtol=0.0, atol=0.0)
        assert_allclose(again.state.responsibilities, self.result.state.responsibilities, rtol=0.0, atol=0.0)


class TestStoppingRule(unittest.TestCase):
    """Test the convergence flag."""

    def setUp(self):
        self.B, self.X, self.S = small_problem(side=4, n=5)
        self.priors = default_priors(self.S, K=2)

    def test_iteration_cap_is_not_convergence(self):
        result = run_variational_em(self.B, self.X, self.S, self.priors,
                                    FitOptions(max_iter=1, multistarts=1, max_evals=20))
        self.assertFalse(result.converged)
        self.assertEqual(result.n_iter, 1)

    def test_loose_tolerance_converges_early(self):
        result = run_variational_em(self.B, self.X, self.S, self.priors,
                                    FitOptions(max_iter=20, elbo_tol=1e6, multistarts=1, max_evals=20))
        self.assertTrue(result.converged)
        self.assertEqual(result.n_iter, 2)

    def test_initial_hypers_shared(self):
        hypers = initial_hypers(self.B, self.X, 3, FitOptions())
        self.assertEqual(len({float(h.theta[0]) for h in hypers}), 1)
        self.assertEqual(len({h.tau_sq for h in hypers}), 1)

    def test_initial_theta_is_admissible(self):
        X = np.linspace(-1.0, 1.0, 12)[:, None]
        B = gp_draws(X, 0.15, count=5, seed=3)
        theta = initial_hypers(B, X, 2, FitOptions())[0].theta
        self.assertTrue(ProfileObjective(X, B).admissible(theta))


class TestClusterSeparation(unittest.TestCase):
    """Nodes with very different input behaviour should not share one cluster."""

    def test_two_regimes(self):
        X = training_inputs(8)
        S = grid_nodes(6)
        B = two_regime_coefficients(S, X)
        result = run_variational_em(B, X, S, default_priors(S, K=4),
                                    FitOptions(max_iter=25, multistarts=2, max_evals=80))
        labels = result.state.responsibilities.argmax(axis=1)
        left = S[:, 0] < 0.5
        # Majority labels of the two halves differ
        self.assertNotEqual(np.bincount(labels[left]).argmax(), np.bincount(labels[~left]).argmax())


class TestElboMonotone(unittest.TestCase):
    """The bound never drops beyond round-off, on FEM data and on seeded random problems."""

    def test_poisson_training_data(self):
        dataset = generate_dataset(0.2, training_inputs(5)[:, 0])
        S = dataset.mesh.nodes
        result = run_variational_em(dataset.solutions, dataset.inputs, S, default_priors(S, K=10),
                                    FitOptions(max_iter=25, multistarts=2, max_evals=60))
        self.assertGreaterEqual(result.n_iter, 2)
        _assert_non_decreasing(self, result.elbo_trace)
        self.assertTrue(result.monotone)

    def test_seeded_random_problems(self):
        rng = np.random.default_rng(2024)
        for seed in range(10):
            side = int(rng.integers(5, 15))
            n = int(rng.integers(4, 9))
            B, X, S = rough_problem(side=side, n=n, seed=seed)
            B = B * float(rng.uniform(0.1, 10.0))
            with self.subTest(seed=seed, N=side * side, n=n):
                result = run_variational_em(B, X, S, default_priors(S, K=4),
                                            FitOptions(max_iter=8, multistarts=1, max_evals=30, seed=seed))
                _assert_non_decreasing(self, result.elbo_trace)
                self.assertTrue(result.monotone)


class TestMonotoneFlag(unittest.TestCase):
    """A drop in the recorded bound clears the flag without stopping the fit."""

    def setUp(self):
        self.B, self.X, self.S = small_problem(side=3, n=4)
        self.priors = default_priors(self.S, K=2)
        self.options = FitOptions(max_iter=3, multistarts=1, max_evals=10, elbo_tol=1e-12)

    @patch("src.mixture.fitter.elbo")
    def test_drop_clears_flag(self, mock_elbo):
        mock_elbo.side_effect = [-10.0, -20.0, -19.0]
        result = run_variational_em(self.B, self.X, self.S, self.priors, self.options)
        self.assertFalse(result.monotone)
        self.assertEqual(result.elbo_trace, [-10.0, -20.0, -19.0])

    @patch("src.mixture.fitter.elbo")
    def test_drop_within_slack_is_round_off(self, mock_elbo):
        mock_elbo.side_effect = [-10.0, -10.0 - 1e-9, -9.0]
        result = run_variational_em(self.B, self.X, self.S, self.priors, self.options)
        self.assertTrue(result.monotone)


class TestInitialOccupancy(unittest.TestCase):
    """The start fills only the first `occupied` clusters."""

    def test_later_clusters_start_empty(self):
        R = initial_responsibilities(grid_nodes(5), K=6, seed=0, occupied=2)
        assert_array_equal(R[:, 2:], 0.0)
        assert_allclose(R.sum(axis=1), 1.0)
        assert_allclose(np.sort(R[:, :2], axis=1), np.tile([0.1, 0.9], (25, 1)))

    def test_groups_follow_output_scale(self):
        S = grid_nodes(4)
        X = training_inputs(5)
        big = S[:, 0] > 0.5
        B = np.where(big[:, None], 5.0, 0.1) * np.cos(X[:, 0])[None, :]
        R = initial_responsibilities(output_scales(B), K=5, seed=0, occupied=3)
        labels = R.argmax(axis=1)
        self.assertEqual(len(set(labels[big])), 1)
        self.assertEqual(len(set(labels[~big])), 1)
        self.assertNotEqual(labels[big][0], labels[~big][0])
        assert_array_equal(R[:, 2:], 0.0)

    def test_zero_outputs_fill_one_cluster(self):
        R = initial_responsibilities(output_scales(np.zeros((9, 4))), K=3, seed=0, occupied=2)
        assert_array_equal(R, np.tile([1.0, 0.0, 0.0], (9, 1)))

    def test_output_scales(self):
        B = np.array([[3.0, 4.0], [0.0, 0.0]])
        assert_allclose(output_scales(B), [[np.sqrt(12.5)], [0.0]])

    def test_rejects_nonpositive_init_clusters(self):
        with self.assertRaises(InvalidArgumentError):
            FitOptions(init_clusters=0)


class TestIterationCost(unittest.TestCase):
    """Per-iteration time grows about linearly with the node count."""

    def test_scaling_in_node_count(self):
        options = FitOptions(max_iter=4, multistarts=1, max_evals=20, elbo_tol=1e-300)
        counts, seconds = [], []
        for side in (10, 14, 20):
            B, X, S = rough_problem(side=side, n=5)
            priors = default_priors(S, K=4)
            elapsed, result = median_time(lambda: run_variational_em(B, X, S, priors, options), repeats=3)
            counts.append(S.shape[0])
            seconds.append(elapsed / result.n_iter)
        slope = np.polyfit(np.log(counts), np.log(seconds), 1)[0]
        self.assertLessEqual(slope, 1.3, msg=f"per-iteration seconds {seconds} for N={counts}")


class TestCheckTrainingData(unittest.TestCase):
    """Test input validation."""

    def test_rejects_node_count_mismatch(self):
        B, X, S = small_problem(side=3, n=4)
        with self.assertRaises(InvalidArgumentError):
            check_training_data(B, X, S[:-1])

    def test_rejects_nonfinite_outputs(self):
        B, X, S = small_problem(side=3, n=4)
        B[2, 1] = np.inf
        with self.assertRaises(InvalidArgumentError):
            check_training_data(B, X, S)

    def test_prior_dimension_mismatch(self):
        B, X, S = small_problem(side=3, n=4)
        priors = default_priors(S[:, :1], K=2)
        with self.assertRaises(InvalidArgumentError):
            run_variational_em(B, X, S, priors, FitOptions(max_iter=1))


if __name__ == '__main__':
    unittest.main()
