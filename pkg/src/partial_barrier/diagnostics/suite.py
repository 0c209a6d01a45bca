"""The verification suite behind `partial-barrier verify`."""

import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..cluster.core import StarvationError
from ..cluster.streams import make_rng
from ..config.base import ClusterSpec
from ..config.model import SolverConfig, feature_dim
from ..features import (NumericalFailureError, compute_bounds, gradient,
                        solve_closed_form)
from ..sampling import (ConfidenceSpec, Population, SamplingError,
                        brute_force_sample_variance, coverage_probe,
                        required_sample_size, sample_mean_variance)
from ..schema.data import DataBounds, Dataset
from ..schema.trace import IterationRecord
from ..solver import (GammaRangeError, full_batch_reference, resolve_eta,
                      resolve_gamma, run)
from ..types.enums import CheckSeverity, PayloadMode
from .checks import (aggregate_noise_floor, bt_norm_bound, contraction_check,
                     finite_diff_gradient, inner_product_bound_check,
                     relaxed_theta_norm_bound, strong_convexity_gap,
                     theta_norm_bound)

logger = logging.getLogger(__name__)

VERIFY_STREAM = "verify"

CHECK_HEADER = (
    "t",
    "objective",
    "dist_to_opt",
    "theta_norm",
    "b_norm",
    "inner_product_gap",
    "contraction_lhs",
    "contraction_rhs",
    "ratio",
)


class CheckFailure(AssertionError):
    def __init__(self, check: str, detail: str) -> None:
        self.check = check
        self.detail = detail
        super().__init__(f"{check}: {detail}")


class CheckResult(BaseModel):
    name: str
    severity: CheckSeverity
    passed: bool
    detail: str = Field(default="")
    value: Optional[float] = Field(default=None)
    violations: List[int] = Field(default_factory=list)


class IterationCheckRow(BaseModel):
    """Per-iterate values of the full-batch checks, one line of verify_checks.csv."""

    t: int
    objective: float
    dist_to_opt: float
    theta_norm: float
    b_norm: float
    inner_product_gap: float
    contraction_lhs: Optional[float] = None
    contraction_rhs: Optional[float] = None
    ratio: Optional[float] = None

    def to_csv(self) -> List[str]:
        def fmt(v: Optional[float]) -> str:
            return "" if v is None else repr(float(v))

        return [
            str(self.t),
            fmt(self.objective),
            fmt(self.dist_to_opt),
            fmt(self.theta_norm),
            fmt(self.b_norm),
            fmt(self.inner_product_gap),
            fmt(self.contraction_lhs),
            fmt(self.contraction_rhs),
            fmt(self.ratio),
        ]


class VerificationReport(BaseModel):
    results: List[CheckResult] = Field(default_factory=list)
    rows: List[IterationCheckRow] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results if r.severity == CheckSeverity.HARD)

    @property
    def first_failure(self) -> Optional[CheckResult]:
        for r in self.results:
            if r.severity == CheckSeverity.HARD and not r.passed:
                return r
        return None

    def raise_for_failure(self) -> None:
        failure = self.first_failure
        if failure is not None:
            raise CheckFailure(failure.name, failure.detail)


def pre_convergence(trace: List[IterationRecord], floor: float) -> List[IterationRecord]:
    """Prefix of the trace ending at the first iterate whose gradient norm is at or below `floor`."""
    for i, record in enumerate(trace):
        if record.grad_norm <= floor:
            return trace[: i + 1]
    return trace


class VerificationSuite:
    """
    Runs every numerical check against one dataset and cluster.

    Hard checks decide the exit status. Soft checks are reported and never fail
    the suite; they cover quantities that only hold in distribution (partial
    barriers, Monte-Carlo coverage) or whose constant is not trusted.
    """

    def __init__(
        self,
        data: Dataset,
        cluster: ClusterSpec,
        cfg: SolverConfig,
        seed: int = 0,
        random_instances: int = 50,
        gap_samples: int = 1000,
        max_population: int = 12,
        populations_per_size: int = 20,
        coverage_trials: int = 2000,
        partial_seeds: int = 3,
        partial_t_max: int = 2000,
    ) -> None:
        self.data = data
        self.cluster = cluster
        self.cfg = cfg
        self.seed = seed
        self.random_instances = random_instances
        self.gap_samples = gap_samples
        self.max_population = max_population
        self.populations_per_size = populations_per_size
        self.coverage_trials = coverage_trials
        self.partial_seeds = partial_seeds
        self.partial_t_max = partial_t_max
        self.report = VerificationReport()

    def _add(
        self,
        name: str,
        severity: CheckSeverity,
        passed: bool,
        detail: str = "",
        value: Optional[float] = None,
        violations: Optional[List[int]] = None,
    ) -> CheckResult:
        result = CheckResult(
            name=name,
            severity=severity,
            passed=passed,
            detail=detail,
            value=value,
            violations=violations or [],
        )
        self.report.results.append(result)
        level = logging.INFO if passed else (
            logging.ERROR if severity == CheckSeverity.HARD else logging.WARNING
        )
        logger.log(level, f"[{severity.value}] {name}: {'pass' if passed else 'FAIL'} {detail}")
        return result

    def _rng(self, name: str) -> np.random.Generator:
        return make_rng(self.seed, f"{VERIFY_STREAM}.{name}")

    def run(self) -> VerificationReport:
        steps: List[Callable[[], None]] = [
            self.check_gradient,
            self.check_sampling_variance,
            self.check_strong_convexity,
            self.check_full_batch,
            self.check_partial_batch,
            self.check_coverage,
        ]
        for step in steps:
            step()
        status = "passed" if self.report.passed else "failed"
        logger.info(f"Verification {status}: {len(self.report.results)} checks")
        return self.report

    def check_gradient(self) -> None:
        rng = self._rng("gradient")
        worst = 0.0
        for _ in range(self.random_instances):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 11))
            lam = float(rng.uniform(0.01, 1.0))
            data = Dataset(X=rng.uniform(-1.0, 1.0, size=(m, n)), y=rng.normal(size=m))
            theta = rng.normal(size=feature_dim(n))
            analytic = gradient(theta, data, lam)
            # gradient is half the derivative of the objective
            numeric = 0.5 * finite_diff_gradient(theta, data, lam)
            err = float(np.linalg.norm(analytic - numeric)) / (1.0 + float(np.linalg.norm(analytic)))
            worst = max(worst, err)
        self._add(
            "gradient_finite_difference",
            CheckSeverity.HARD,
            worst <= 1e-6,
            f"worst relative error {worst:.3e} over {self.random_instances} instances",
            worst,
        )

    def check_sampling_variance(self) -> None:
        rng = self._rng("sampling")
        worst = 0.0
        for N in range(2, self.max_population + 1):
            for _ in range(self.populations_per_size):
                pop = Population.from_values(rng.normal(size=N))
                sigma2 = pop.variance
                for n in range(1, N + 1):
                    exact = brute_force_sample_variance(pop, n)
                    err = abs(sample_mean_variance(N, n, sigma2) - exact) / (1.0 + sigma2)
                    worst = max(worst, err)
        self._add(
            "sample_mean_variance_enumeration",
            CheckSeverity.HARD,
            worst <= 1e-12,
            f"worst scaled error {worst:.3e} for N <= {self.max_population}, "
            f"{self.populations_per_size} populations per N",
            worst,
        )

    def check_strong_convexity(self) -> None:
        theta_star = solve_closed_form(self.data, self.cfg.lam)
        rng = self._rng("convexity")
        scale = 1.0 + float(np.linalg.norm(theta_star))
        gaps = [
            strong_convexity_gap(
                theta_star + scale * rng.normal(size=theta_star.shape[0]),
                theta_star,
                self.data,
                self.cfg.lam,
            )
            for _ in range(self.gap_samples)
        ]
        smallest = min(gaps)
        self._add(
            "strong_convexity_gap",
            CheckSeverity.HARD,
            smallest >= -1e-10,
            f"smallest gap {smallest:.3e} over {self.gap_samples} points",
            smallest,
        )

    def _full_batch_trace(self, theta_star: np.ndarray) -> Tuple[List[IterationRecord], bool]:
        # failures would starve a gamma = M barrier; the analysis is about the iterates
        cluster = self.cluster.model_copy(
            update={"latency": self.cluster.latency.model_copy(update={"fail_prob": 0.0})}
        )
        try:
            trace = run(
                self.data, cluster, self.cfg, seed=self.seed, gamma=cluster.M, theta_star=theta_star
            )
            return trace, False
        except NumericalFailureError as e:
            logger.error(f"Full-batch run diverged: {str(e)}")
            return list(e.trace), True

    def check_full_batch(self) -> None:
        data, cfg = self.data, self.cfg
        lam = cfg.lam
        theta_star = solve_closed_form(data, lam)
        bounds = compute_bounds(data)
        l = feature_dim(data.n)  # noqa: E741
        eta = resolve_eta(data, cfg)
        trace, diverged = self._full_batch_trace(theta_star)

        self._check_monotone(trace, diverged)
        b_vectors = [gradient(r.theta, data, lam) for r in trace]
        self._check_inner_product(trace, theta_star, b_vectors, lam)
        self._check_norm_bounds(trace, b_vectors, bounds, lam, l, CheckSeverity.HARD, "full_batch")
        rows = [
            IterationCheckRow(
                t=r.t,
                objective=r.objective,
                dist_to_opt=float(np.linalg.norm(r.theta - theta_star)),
                theta_norm=float(np.linalg.norm(r.theta)),
                b_norm=float(np.linalg.norm(b)),
                inner_product_gap=inner_product_bound_check(r.theta, theta_star, b, lam),
            )
            for r, b in zip(trace, b_vectors)
        ]

        if len(trace) < 2:
            self._add("contraction", CheckSeverity.HARD, False, f"trace has {len(trace)} record(s)")
            self.report.rows = rows
            return
        rate = contraction_check(trace, theta_star, eta, lam, bounds, l)
        for i, row in enumerate(rows[:-1]):
            rows[i] = row.model_copy(
                update={
                    "contraction_lhs": rate.lhs[i],
                    "contraction_rhs": rate.rhs[i],
                    "ratio": rate.ratios[i],
                }
            )
        self.report.rows = rows

        detail = f"{len(rate.violations)} violations over {len(rate.ratios)} steps"
        if rate.violations:
            detail += f", first at t={rate.violations[0]}"
        if diverged:
            detail = f"run diverged after {len(trace) - 1} steps; {detail}"
        self._add(
            "contraction",
            CheckSeverity.HARD,
            not diverged and not rate.violations,
            detail,
            float(len(rate.violations)),
            violations=rate.violations,
        )
        if diverged:
            return
        already_optimal = rows[0].dist_to_opt == 0.0
        self._add(
            "fitted_rate",
            CheckSeverity.HARD,
            already_optimal or 0.0 < rate.fitted_q < 1.0,
            f"fitted q = {rate.fitted_q:.6g} after burn-in {rate.burn_in}",
            rate.fitted_q,
        )
        expected = 1.0 - lam * eta
        within = expected > 0 and rate.fitted_q > 0 and 1 / 3 <= rate.fitted_q / expected <= 3
        self._add(
            "rate_order",
            CheckSeverity.SOFT,
            within,
            f"fitted q = {rate.fitted_q:.6g} vs 1 - lam*eta = {expected:.6g}",
            rate.fitted_q,
        )
        final_dist = rows[-1].dist_to_opt
        self._add(
            "oracle_distance",
            CheckSeverity.SOFT,
            final_dist <= 1e-6,
            f"final distance to optimum {final_dist:.3e}",
            final_dist,
        )
        self._check_reference(trace)

    def _check_monotone(self, trace: List[IterationRecord], diverged: bool) -> None:
        rises = [
            b.t
            for a, b in zip(trace, trace[1:])
            if b.objective > a.objective + 1e-12 * (1.0 + abs(a.objective))
        ]
        detail = f"objective rose at {len(rises)} steps"
        if diverged:
            detail = f"run diverged after {len(trace) - 1} steps; {detail}"
        self._add("objective_monotone", CheckSeverity.HARD, not diverged and not rises, detail)

    def _check_inner_product(
        self,
        trace: List[IterationRecord],
        theta_star: np.ndarray,
        b_vectors: List[np.ndarray],
        lam: float,
    ) -> None:
        values = [
            inner_product_bound_check(r.theta, theta_star, b, lam) for r, b in zip(trace, b_vectors)
        ]
        largest = max(values)
        self._add(
            "inner_product_bound",
            CheckSeverity.HARD,
            largest <= 1e-10,
            f"largest value {largest:.3e} over {len(values)} iterates",
            largest,
        )

    def _check_norm_bounds(
        self,
        trace: List[IterationRecord],
        b_vectors: List[np.ndarray],
        bounds: DataBounds,
        lam: float,
        l: int,  # noqa: E741
        severity: CheckSeverity,
        prefix: str,
    ) -> None:
        b_limit = bt_norm_bound(bounds, lam, l)
        b_over = sum(1 for b in b_vectors if float(np.linalg.norm(b)) > b_limit * (1 + 1e-12))
        self._add(
            f"{prefix}_update_norm_bound",
            severity,
            b_over == 0,
            f"{b_over} of {len(b_vectors)} update norms above {b_limit:.6g}",
            float(b_over),
        )
        theta_norms = [float(np.linalg.norm(r.theta)) for r in trace]
        relaxed = relaxed_theta_norm_bound(bounds, lam)
        relaxed_over = sum(1 for v in theta_norms if v > relaxed * (1 + 1e-12))
        self._add(
            f"{prefix}_theta_norm_relaxed",
            severity,
            relaxed_over == 0,
            f"{relaxed_over} of {len(theta_norms)} iterates above y*k/lam = {relaxed:.6g}",
            float(relaxed_over),
        )
        tight = theta_norm_bound(bounds, lam, l)
        tight_over = sum(1 for v in theta_norms if v > tight)
        self._add(
            f"{prefix}_theta_norm_dimension_scaled",
            CheckSeverity.SOFT,
            tight_over == 0,
            f"{tight_over} of {len(theta_norms)} iterates above y*k/(lam*l) = {tight:.6g}",
            float(tight_over),
        )

    def _check_reference(self, trace: List[IterationRecord]) -> None:
        reference = full_batch_reference(self.data, self.cluster.M, self.cfg, len(trace) - 1)
        mismatched = [
            r.t for r, ref in zip(trace, reference) if not np.array_equal(r.theta, ref)
        ]
        self._add(
            "serial_reference_identity",
            CheckSeverity.HARD,
            not mismatched,
            f"{len(mismatched)} iterates differ from the serial full-batch reference"
            + (f", first at t={mismatched[0]}" if mismatched else ""),
        )

    def check_partial_batch(self) -> None:
        data, cfg = self.data, self.cfg
        cfg = cfg.model_copy(update={"t_max": min(cfg.t_max, self.partial_t_max)})
        lam = cfg.lam
        theta_star = solve_closed_form(data, lam)
        bounds = compute_bounds(data)
        l = feature_dim(data.n)  # noqa: E741
        eta = resolve_eta(data, cfg)
        alpha = cfg.gamma_policy.alpha
        floor = 1.0 - alpha - 0.05
        try:
            gamma = resolve_gamma(cfg.gamma_policy, data.m, self.cluster.M)
        except (GammaRangeError, SamplingError) as e:
            self._add("partial_gamma", CheckSeverity.HARD, False, str(e))
            return
        noise_floor = aggregate_noise_floor(data, self.cluster.M, gamma, lam, theta_star, alpha)

        counts = {"window": [0, 0], "all": [0, 0]}
        contracting: List[float] = []
        for k in range(self.partial_seeds):
            seed = self.seed + k
            try:
                full_trace = run(data, self.cluster, cfg, seed=seed, gamma=gamma, theta_star=theta_star)
            except (StarvationError, NumericalFailureError) as e:
                self._add(f"partial_run_seed_{seed}", CheckSeverity.SOFT, False, str(e))
                continue
            trace = pre_convergence(full_trace, noise_floor)
            for key, records in (("window", trace), ("all", full_trace)):
                products = [r.descent_product for r in records[1:] if r.descent_product is not None]
                counts[key][0] += sum(1 for p in products if p > 0)
                counts[key][1] += len(products)
            if len(trace) >= 2:
                contracting.append(
                    contraction_check(trace, theta_star, eta, lam, bounds, l).fraction_contracting
                )
            if k == 0:
                self._check_partial_bounds(trace, theta_star, bounds, lam, l)

        descents, steps = counts["window"]
        if steps:
            frequency = descents / steps
            self._add(
                "partial_descent_frequency",
                CheckSeverity.SOFT,
                frequency >= floor,
                f"descent in {descents}/{steps} rounds above the aggregate noise floor "
                f"{noise_floor:.3e} (floor {floor:.3f})",
                frequency,
            )
        descents, steps = counts["all"]
        if steps:
            frequency = descents / steps
            self._add(
                "partial_descent_frequency_all_rounds",
                CheckSeverity.SOFT,
                frequency >= floor,
                f"descent in {descents}/{steps} rounds up to has_converged (floor {floor:.3f})",
                frequency,
            )
        if contracting:
            worst = min(contracting)
            self._add(
                "partial_contracting_fraction",
                CheckSeverity.SOFT,
                worst >= 0.95,
                f"smallest post-burn-in contracting fraction {worst:.3f}",
                worst,
            )

    def _check_partial_bounds(
        self,
        trace: List[IterationRecord],
        theta_star: np.ndarray,
        bounds: DataBounds,
        lam: float,
        l: int,  # noqa: E741
    ) -> None:
        pairs = []
        for before, after in zip(trace, trace[1:]):
            if after.aggregate is None:
                continue
            b = after.aggregate
            if self.cfg.payload_mode == PayloadMode.PARAMETERS:
                b = before.theta - after.aggregate
            pairs.append((before, b))
        positive = sum(
            1 for r, b in pairs if inner_product_bound_check(r.theta, theta_star, b, lam) > 1e-10
        )
        self._add(
            "partial_inner_product_bound",
            CheckSeverity.SOFT,
            positive == 0,
            f"{positive} of {len(pairs)} rounds above zero",
            float(positive),
        )
        self._check_norm_bounds(
            [r for r, _ in pairs], [b for _, b in pairs], bounds, lam, l, CheckSeverity.SOFT, "partial"
        )

    def check_coverage(self) -> None:
        rng = self._rng("coverage")
        pop = Population.from_values(rng.uniform(0.0, 1.0, size=2000))
        alpha = self.cfg.gamma_policy.alpha
        floor = 1.0 - alpha - 0.03
        s2 = pop.variance * pop.N / (pop.N - 1)
        worst = 1.0
        for level in (0.02, 0.05, 0.1):
            delta = level * math.sqrt(s2)
            spec = ConfidenceSpec(alpha=alpha, delta=delta)
            n = required_sample_size(pop.N, spec, s2)
            coverage = coverage_probe(pop, n, delta, self.coverage_trials, self.seed)
            worst = min(worst, coverage)
        self._add(
            "sample_size_coverage",
            CheckSeverity.SOFT,
            worst >= floor,
            f"smallest coverage {worst:.4f} (floor {floor:.3f})",
            worst,
        )
