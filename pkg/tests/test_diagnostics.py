"""Unit tests for the numerical checks and the verification suite."""
import unittest

import numpy as np
import pytest

from partial_barrier.config.base import ClusterSpec, LatencyModel
from partial_barrier.config.model import GammaPolicy, SolverConfig
from partial_barrier.diagnostics import (CheckFailure, RateReport, VerificationSuite,
                                         aggregate_noise_floor, bt_norm_bound, contraction_check,
                                         descent_check, finite_diff_gradient,
                                         inner_product_bound_check,
                                         pre_convergence, relaxed_theta_norm_bound,
                                         strong_convexity_gap, theta_norm_bound)
from partial_barrier.features import (DimensionMismatchError, gradient,
                                      objective, solve_closed_form)
from partial_barrier.io import generate_synthetic
from partial_barrier.schema.data import DataBounds, Dataset
from partial_barrier.schema.trace import IterationRecord
from partial_barrier.types.enums import CheckSeverity, GammaMode

UNIT = DataBounds(k_max=1.0, y_max=1.0, lip_hat=1.0)


def records(thetas, grad_norms=None):
    grad_norms = grad_norms or [1.0] * len(thetas)
    return [
        IterationRecord(t=t, sim_time=float(t), theta=np.asarray(theta, dtype=float), objective=0.0,
                        grad_norm=g, gamma=1)
        for t, (theta, g) in enumerate(zip(thetas, grad_norms))
    ]


class TestBounds(unittest.TestCase):
    def test_update_norm_bound(self):
        """Test y k^3 / lam + sqrt(l) y k + y k / l = 3.25 for k=y=lam=1, l=4."""
        self.assertEqual(bt_norm_bound(UNIT, 1.0, 4), 3.25)

    def test_theta_norm_bounds(self):
        """Test y k / (lam l) and y k / lam."""
        self.assertAlmostEqual(theta_norm_bound(UNIT, 1.0, 3), 1.0 / 3.0, places=15)
        bounds = DataBounds(k_max=2.0, y_max=3.0, lip_hat=4.0)
        self.assertEqual(relaxed_theta_norm_bound(bounds, 0.5), 12.0)

    def test_nonpositive_lambda(self):
        """Test that the bounds need lam > 0."""
        for fn in (lambda: bt_norm_bound(UNIT, 0.0, 3), lambda: theta_norm_bound(UNIT, -1.0, 3),
                   lambda: relaxed_theta_norm_bound(UNIT, 0.0)):
            with self.assertRaises(ValueError):
                fn()


class TestDescent(unittest.TestCase):
    def test_orthogonal_is_zero(self):
        """Test a zero inner product for orthogonal vectors."""
        self.assertEqual(descent_check(np.array([1.0, 0.0]), np.array([0.0, 2.0])), 0.0)

    def test_same_direction_is_positive(self):
        """Test that the full gradient itself is a descent direction."""
        g = np.array([0.3, -0.4])
        self.assertAlmostEqual(descent_check(g, g), 0.25, places=15)

    def test_shape_mismatch(self):
        """Test that vectors of different length are rejected."""
        with self.assertRaises(DimensionMismatchError):
            descent_check(np.zeros(3), np.zeros(2))


class TestConvexity(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(31)
        self.data = Dataset(X=rng.uniform(-1, 1, size=(10, 2)), y=rng.normal(size=10))
        self.lam = 0.2
        self.theta_star = solve_closed_form(self.data, self.lam)
        self.rng = rng

    def test_gap_zero_at_optimum(self):
        """Test that the gap vanishes at theta*."""
        self.assertEqual(strong_convexity_gap(self.theta_star, self.theta_star, self.data, self.lam), 0.0)

    def test_gap_nonnegative(self):
        """Test the strong-convexity gap at 500 random points."""
        for _ in range(500):
            theta = self.theta_star + 3.0 * self.rng.normal(size=6)
            self.assertGreaterEqual(strong_convexity_gap(theta, self.theta_star, self.data, self.lam), -1e-10)

    def test_inner_product_bound_with_full_gradient(self):
        """Test the inner-product bound when B is the full gradient."""
        for _ in range(200):
            theta = self.theta_star + self.rng.normal(size=6)
            value = inner_product_bound_check(theta, self.theta_star, gradient(theta, self.data, self.lam), self.lam)
            self.assertLessEqual(value, 1e-10)

    def test_inner_product_bound_at_optimum(self):
        """Test a zero value at theta = theta*."""
        self.assertEqual(inner_product_bound_check(self.theta_star, self.theta_star, np.ones(6), self.lam), 0.0)


class TestContraction(unittest.TestCase):
    def test_start_at_optimum(self):
        """Test that a trace sitting on theta* contracts trivially."""
        star = np.array([1.0, 2.0, 3.0])
        report = contraction_check(records([star] * 4), star, 0.5, 1.0, UNIT, 3)
        self.assertEqual(report.violations, [])
        self.assertEqual(report.ratios, [0.0, 0.0, 0.0])
        self.assertEqual(report.fitted_q, 0.0)

    def test_geometric_trace(self):
        """Test that halving distances fit q = 0.5 with no violations."""
        star = np.zeros(3)
        thetas = [np.array([0.5 ** t, 0.0, 0.0]) for t in range(30)]
        report = contraction_check(records(thetas), star, 0.5, 1.0, UNIT, 3)
        self.assertEqual(report.violations, [])
        self.assertAlmostEqual(report.fitted_q, 0.5, places=12)
        self.assertEqual(report.fraction_contracting, 1.0)
        self.assertEqual(len(report.lhs), 29)

    def test_growth_is_flagged(self):
        """Test that a distance far beyond the slack is reported at its step."""
        star = np.zeros(3)
        thetas = [np.array([1.0, 0, 0]), np.array([1e6, 0, 0])]
        report = contraction_check(records(thetas), star, 0.1, 1.0, UNIT, 3)
        self.assertEqual(report.violations, [0])

    def test_needs_two_records(self):
        """Test that a single record cannot be checked."""
        with self.assertRaises(ValueError):
            contraction_check(records([np.zeros(3)]), np.zeros(3), 0.1, 1.0, UNIT, 3)

    def test_fraction_contracting(self):
        """Test the share of post-burn-in ratios below one."""
        report = RateReport(ratios=[2.0, 0.5, 1.5, 0.5], fitted_q=0.9, burn_in=1)
        self.assertAlmostEqual(report.fraction_contracting, 2.0 / 3.0, places=15)


class TestPreConvergence(unittest.TestCase):
    def test_cut_at_noise_floor(self):
        """Test that the prefix ends at the first gradient norm at or below the floor."""
        trace = records([np.zeros(3)] * 5, [1.0, 0.5, 0.04, 0.2, 0.01])
        self.assertEqual([r.t for r in pre_convergence(trace, 0.05)], [0, 1, 2])
        self.assertEqual([r.t for r in pre_convergence(trace, 0.5)], [0, 1])

    def test_never_converges(self):
        """Test that the whole trace is kept above the floor."""
        trace = records([np.zeros(3)] * 3, [1.0, 0.9, 0.8])
        self.assertEqual(len(pre_convergence(trace, 0.05)), 3)
        self.assertEqual(len(pre_convergence(trace, 0.0)), 3)


class TestAggregateNoiseFloor(unittest.TestCase):
    def setUp(self):
        self.data, _ = generate_synthetic(n=2, m=200, seed=7, noise_sd=0.1)
        self.theta_star = solve_closed_form(self.data, 0.1)

    def test_full_barrier_has_no_noise(self):
        """Test that waiting for every worker gives a zero floor."""
        self.assertEqual(aggregate_noise_floor(self.data, 10, 10, 0.1, self.theta_star, 0.05), 0.0)

    def test_hand_computed(self):
        """Test u_{0.95} * sqrt(sum_c var_c (M - gamma) / (gamma (M - 1))) for one abandoned worker."""
        shards = np.array(
            [gradient(self.theta_star, self.data.block(20 * j, 20 * (j + 1)), 0.1) for j in range(10)]
        )
        expected = 1.6448536269514722 * np.sqrt(shards.var(axis=0).sum() / 81.0)
        floor = aggregate_noise_floor(self.data, 10, 9, 0.1, self.theta_star, 0.05)
        self.assertAlmostEqual(floor, expected, delta=1e-8 * expected)

    def test_shrinks_with_gamma(self):
        """Test that waiting for more workers lowers the floor."""
        floors = [aggregate_noise_floor(self.data, 10, g, 0.1, self.theta_star, 0.05) for g in (2, 5, 9)]
        self.assertGreater(floors[0], floors[1])
        self.assertGreater(floors[1], floors[2])

    def test_invalid_gamma(self):
        """Test that gamma outside [1, M] is rejected."""
        with self.assertRaises(ValueError):
            aggregate_noise_floor(self.data, 10, 11, 0.1, self.theta_star, 0.05)


def test_finite_diff_quadratic(tiny_dataset):
    theta = np.array([0.1, -0.2, 0.3])
    numeric = finite_diff_gradient(theta, tiny_dataset, 1.0)
    # f = (theta . (1,1,1) - 3)^2 + theta . theta
    expected = 2 * (theta.sum() - 3.0) * np.ones(3) + 2 * theta
    np.testing.assert_allclose(numeric, expected, atol=1e-8)
    assert objective(theta, tiny_dataset, 1.0) == pytest.approx((theta.sum() - 3) ** 2 + theta @ theta)


def test_finite_diff_rejects_step():
    with pytest.raises(ValueError):
        finite_diff_gradient(np.zeros(3), Dataset(X=np.ones((1, 1)), y=np.ones(1)), 1.0, h=0.0)


def small_suite(data, cfg, **kwargs):
    cluster = ClusterSpec(M=10, latency=LatencyModel(jitter_log_sigma=0.25, straggle_prob=0.1, straggle_factor=10.0))
    options = dict(random_instances=10, gap_samples=200, coverage_trials=500, partial_seeds=1, partial_t_max=300)
    options.update(kwargs)
    return VerificationSuite(data, cluster, cfg, seed=0, **options)


def test_suite_passes_on_small_config(small_dataset):
    report = small_suite(small_dataset, SolverConfig(lam=0.1, t_max=20000, tol=1e-8)).run()
    assert report.passed, report.first_failure
    hard = {r.name for r in report.results if r.severity == CheckSeverity.HARD}
    assert {
        "gradient_finite_difference",
        "sample_mean_variance_enumeration",
        "strong_convexity_gap",
        "objective_monotone",
        "inner_product_bound",
        "full_batch_update_norm_bound",
        "full_batch_theta_norm_relaxed",
        "contraction",
        "fitted_rate",
        "serial_reference_identity",
    } <= hard
    soft = {r.name for r in report.results if r.severity == CheckSeverity.SOFT}
    assert {"partial_descent_frequency", "sample_size_coverage", "oracle_distance"} <= soft
    assert report.rows[0].t == 0
    assert report.rows[0].contraction_lhs is not None
    report.raise_for_failure()


def test_suite_flags_oversized_step(small_dataset):
    report = small_suite(small_dataset, SolverConfig(lam=0.1, eta=100.0, t_max=20000, tol=1e-8)).run()
    assert not report.passed
    assert report.first_failure.name == "objective_monotone"
    with pytest.raises(CheckFailure) as info:
        report.raise_for_failure()
    assert info.value.check == "objective_monotone"
    contraction = next(r for r in report.results if r.name == "contraction")
    assert not contraction.passed
    assert contraction.violations
    assert contraction.detail.startswith("run diverged")
    assert contraction.value == float(len(contraction.violations))


def test_suite_reports_both_descent_windows(small_dataset):
    report = small_suite(small_dataset, SolverConfig(lam=0.1, t_max=20000, tol=1e-8)).run()
    names = [r.name for r in report.results]
    assert "partial_descent_frequency" in names
    assert "partial_descent_frequency_all_rounds" in names
    window = next(r for r in report.results if r.name == "partial_descent_frequency")
    assert "aggregate noise floor" in window.detail


def test_suite_enumerates_populations_up_to_twelve():
    suite = VerificationSuite(Dataset(X=np.ones((2, 1)), y=np.ones(2)), ClusterSpec(M=2), SolverConfig())
    assert (suite.max_population, suite.populations_per_size) == (12, 20)
    suite.check_sampling_variance()
    result = suite.report.results[-1]
    assert result.passed
    assert "N <= 12, 20 populations per N" in result.detail


def test_suite_records_gamma_out_of_range(small_dataset):
    cfg = SolverConfig(lam=0.1, t_max=50, gamma_policy=GammaPolicy(mode=GammaMode.EXPLICIT, gamma=20))
    suite = small_suite(small_dataset, cfg)
    suite.check_partial_batch()
    result = suite.report.results[-1]
    assert result.name == "partial_gamma"
    assert result.severity == CheckSeverity.HARD
    assert not result.passed
    assert "gamma=20" in result.detail


if __name__ == '__main__':
    unittest.main()
