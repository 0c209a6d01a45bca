"""Unit tests for the feature map, objective, gradient and closed-form solver."""
import unittest

import numpy as np
import pytest

from partial_barrier.config.model import ModelSpec
from partial_barrier.diagnostics import finite_diff_gradient
from partial_barrier.features import (DimensionMismatchError, EmptySubsetError,
                                      compute_bounds, feature_dim, gradient,
                                      kernel_map, kernel_matrix, objective,
                                      solve_closed_form)
from partial_barrier.schema.data import Dataset, Example


def random_instance(rng, n, m):
    return Dataset(X=rng.uniform(-1.0, 1.0, size=(m, n)), y=rng.normal(size=m))


@pytest.mark.parametrize("n, expected", [(1, 3), (2, 6), (5, 21)])
def test_feature_dim(n, expected):
    assert feature_dim(n) == expected


def test_feature_dim_counts_monomials():
    for n in range(1, 9):
        quadratic = sum(1 for j in range(n) for k in range(j, n))
        assert feature_dim(n) == quadratic + n + 1
        assert ModelSpec(lam=0.1, n=n).l == feature_dim(n)


def test_feature_dim_rejects_zero():
    with pytest.raises(ValueError):
        feature_dim(0)


class TestKernelMap(unittest.TestCase):
    def test_zero_input(self):
        """Test that a zero input keeps only the constant feature."""
        np.testing.assert_array_equal(kernel_map([0.0, 0.0]), [0, 0, 0, 0, 0, 1])

    def test_ordering(self):
        """Test the monomial ordering x1^2, x1x2, x2^2, x1, x2, 1."""
        np.testing.assert_array_equal(kernel_map([1.0, 2.0]), [1, 2, 4, 1, 2, 1])
        np.testing.assert_array_equal(kernel_map([3.0]), [9, 3, 1])

    def test_three_inputs(self):
        """Test the grouping by leading index for n = 3."""
        x1, x2, x3 = 2.0, 3.0, 5.0
        expected = [x1 * x1, x1 * x2, x1 * x3, x2 * x2, x2 * x3, x3 * x3, x1, x2, x3, 1.0]
        np.testing.assert_array_equal(kernel_map([x1, x2, x3]), expected)

    def test_length_and_constant(self):
        """Test length and trailing constant for every n up to 8."""
        rng = np.random.default_rng(3)
        for n in range(1, 9):
            phi = kernel_map(rng.normal(size=n))
            self.assertEqual(phi.shape, (feature_dim(n),))
            self.assertEqual(phi[-1], 1.0)

    def test_dimension_mismatch(self):
        """Test that a declared dimension is enforced."""
        with self.assertRaises(DimensionMismatchError):
            kernel_map([1.0, 2.0], n=3)

    def test_matrix_rows_match_map(self):
        """Test that kernel_matrix stacks kernel_map rows."""
        X = np.array([[0.5, -1.0], [2.0, 0.25]])
        Phi = kernel_matrix(X)
        for i in range(2):
            np.testing.assert_array_equal(Phi[i], kernel_map(X[i]))


class TestObjective(unittest.TestCase):
    def setUp(self):
        self.tiny = Dataset(X=np.array([[1.0]]), y=np.array([3.0]))

    def test_zero_residuals(self):
        """Test that zero targets and zero parameters give zero."""
        data = Dataset(X=np.array([[0.0]]), y=np.array([0.0]))
        self.assertEqual(objective(np.zeros(3), data, 0.5), 0.0)

    def test_zero_theta_is_mean_square_target(self):
        """Test objective(0) = mean of y^2."""
        data = Dataset(X=np.array([[1.0], [2.0], [-1.0]]), y=np.array([1.0, -2.0, 4.0]))
        self.assertAlmostEqual(objective(np.zeros(3), data, 0.3), (1 + 4 + 16) / 3, places=14)

    def test_worked_value(self):
        """Test (9/4 - 3)^2 + 3 * (3/4)^2 = 2.25."""
        self.assertEqual(objective(np.full(3, 0.75), self.tiny, 1.0), 2.25)

    def test_rejects_nonpositive_lambda(self):
        """Test that lam must be positive."""
        with self.assertRaises(ValueError):
            objective(np.zeros(3), self.tiny, 0.0)

    def test_dimension_mismatch(self):
        """Test that a wrong-length theta is rejected."""
        with self.assertRaises(DimensionMismatchError):
            objective(np.zeros(4), self.tiny, 1.0)

    def test_permutation_invariance(self):
        """Test that reordering examples changes the value by at most 1e-12."""
        rng = np.random.default_rng(11)
        data = random_instance(rng, 3, 40)
        theta = rng.normal(size=feature_dim(3))
        perm = rng.permutation(data.m)
        shuffled = data.take(perm)
        self.assertLessEqual(
            abs(objective(theta, data, 0.2) - objective(theta, shuffled, 0.2)), 1e-12
        )


class TestGradient(unittest.TestCase):
    def test_zero_at_trivial_point(self):
        """Test a zero gradient for zero data and parameters."""
        data = Dataset(X=np.array([[0.0]]), y=np.array([0.0]))
        np.testing.assert_array_equal(gradient(np.zeros(3), data, 1.0), np.zeros(3))

    def test_zero_theta(self):
        """Test gradient(0) = -(1/|S|) sum y_i K[x_i]."""
        X = np.array([[1.0, 2.0], [-0.5, 0.5]])
        y = np.array([2.0, -1.0])
        data = Dataset(X=X, y=y)
        expected = -(y[0] * kernel_map(X[0]) + y[1] * kernel_map(X[1])) / 2
        np.testing.assert_allclose(gradient(np.zeros(6), data, 0.7), expected, rtol=1e-14, atol=1e-14)

    def test_accepts_examples(self):
        """Test that a list of Example gives the same result as a Dataset."""
        examples = [Example(x=[1.0, 2.0], y=2.0), Example(x=[-0.5, 0.5], y=-1.0)]
        theta = np.linspace(-1, 1, 6)
        np.testing.assert_array_equal(
            gradient(theta, examples, 0.1),
            gradient(theta, Dataset.from_examples(examples), 0.1),
        )

    def test_empty_subset(self):
        """Test that an empty subset is rejected."""
        with self.assertRaises(EmptySubsetError):
            gradient(np.zeros(3), [], 0.1)

    def test_matches_finite_differences(self):
        """Test against central differences on 50 random instances (n <= 3, m <= 10)."""
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 11))
            lam = float(rng.uniform(0.01, 1.0))
            data = random_instance(rng, n, m)
            theta = rng.normal(size=feature_dim(n))
            analytic = gradient(theta, data, lam)
            numeric = 0.5 * finite_diff_gradient(theta, data, lam, h=1e-5)
            err = np.linalg.norm(analytic - numeric) / (1.0 + np.linalg.norm(analytic))
            self.assertLessEqual(err, 1e-6)


class TestClosedForm(unittest.TestCase):
    def test_single_example(self):
        """Test theta* = 3k/4 for x=(1), y=3, lam=1."""
        data = Dataset(X=np.array([[1.0]]), y=np.array([3.0]))
        np.testing.assert_allclose(solve_closed_form(data, 1.0), [0.75, 0.75, 0.75], atol=1e-14)

    def test_zero_targets(self):
        """Test that zero targets give theta* = 0."""
        data = Dataset(X=np.array([[0.3, 0.1], [1.0, -2.0]]), y=np.zeros(2))
        np.testing.assert_array_equal(solve_closed_form(data, 0.1), np.zeros(6))

    def test_gradient_vanishes(self):
        """Test the stationarity tolerance on a random n=2, m=8 instance."""
        rng = np.random.default_rng(17)
        data = random_instance(rng, 2, 8)
        theta_star = solve_closed_form(data, 0.05)
        Phi = kernel_matrix(data.X)
        scale = 1.0 + np.linalg.norm(Phi.T @ data.y / data.m)
        self.assertLessEqual(np.linalg.norm(gradient(theta_star, data, 0.05)), 1e-8 * scale)

    def test_is_minimum(self):
        """Test objective(theta*) <= objective(theta) for 1000 random theta."""
        rng = np.random.default_rng(19)
        data = random_instance(rng, 2, 12)
        lam = 0.1
        theta_star = solve_closed_form(data, lam)
        best = objective(theta_star, data, lam)
        for _ in range(1000):
            theta = theta_star + rng.normal(size=theta_star.shape[0])
            self.assertLessEqual(best, objective(theta, data, lam))

    def test_rejects_nonpositive_lambda(self):
        """Test that lam must be positive."""
        with self.assertRaises(ValueError):
            solve_closed_form(Dataset(X=np.ones((1, 1)), y=np.ones(1)), -1.0)


class TestBounds(unittest.TestCase):
    def test_single_example(self):
        """Test k=4, y=5, lip_hat=27 for x=(1,2), y=-5."""
        bounds = compute_bounds(Dataset(X=np.array([[1.0, 2.0]]), y=np.array([-5.0])))
        self.assertEqual(bounds.k_max, 4.0)
        self.assertEqual(bounds.y_max, 5.0)
        self.assertEqual(bounds.lip_hat, 27.0)

    def test_zero_inputs(self):
        """Test that the constant feature sets k_max = lip_hat = 1."""
        bounds = compute_bounds(Dataset(X=np.zeros((4, 3)), y=np.ones(4)))
        self.assertEqual(bounds.k_max, 1.0)
        self.assertEqual(bounds.lip_hat, 1.0)

    def test_recomputation_by_scan(self):
        """Test against an independent example-by-example scan."""
        rng = np.random.default_rng(23)
        data = random_instance(rng, 3, 30)
        k_max = y_max = lip = 0.0
        for ex in data.examples:
            phi = kernel_map(ex.x)
            k_max = max(k_max, max(abs(v) for v in phi))
            y_max = max(y_max, abs(ex.y))
            lip = max(lip, float(np.dot(phi, phi)))
        bounds = compute_bounds(data)
        self.assertEqual(bounds.k_max, k_max)
        self.assertEqual(bounds.y_max, y_max)
        self.assertAlmostEqual(bounds.lip_hat, lip, places=12)


if __name__ == '__main__':
    unittest.main()
