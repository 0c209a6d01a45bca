"""Finite-population sampling statistics used to size the partial barrier."""

import itertools
import logging
import math
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

logger = logging.getLogger(__name__)

ENUMERATION_LIMIT = 10**6

# Acklam's rational approximation of the standard normal quantile
# (relative error below 1.15e-9 before refinement).
_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425


class SamplingError(ValueError):
    pass


class Population(BaseModel):
    """Finite population Z with mean and variance (divisor N)."""

    model_config = ConfigDict(frozen=True)

    values: List[float] = Field(min_length=1)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Population":
        return cls(values=[float(v) for v in values])

    @property
    def N(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / self.N

    @property
    def variance(self) -> float:
        mu = self.mean
        return math.fsum((v - mu) ** 2 for v in self.values) / self.N


class ConfidenceSpec(BaseModel):
    """
    Attributes:
        alpha: 1 - confidence level.
        xi: Tolerated relative error.
        delta: Tolerated absolute error of the sample mean.
    """

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0, lt=1)
    xi: float = Field(default=0.05, gt=0)
    delta: float = Field(default=0.05, gt=0)

    @property
    def u_half_alpha(self) -> float:
        return inverse_normal_cdf(1.0 - self.alpha / 2.0)


def sample_variance(values: Sequence[float]) -> float:
    """Unbiased variance estimate s^2 (divisor n - 1)."""
    if len(values) < 2:
        raise SamplingError("sample variance needs at least two values")
    mu = math.fsum(values) / len(values)
    return math.fsum((v - mu) ** 2 for v in values) / (len(values) - 1)


def sample_mean_variance(N: int, n: int, sigma2: float) -> float:
    """Variance of the mean of n draws without replacement from N: sigma2 (N-n) / (n (N-1))."""
    if N < 2:
        raise SamplingError(f"population size N must be >= 2, got {N}")
    if not 1 <= n <= N:
        raise SamplingError(f"sample size n must be in [1, {N}], got {n}")
    if sigma2 < 0:
        raise SamplingError(f"sigma2 must be >= 0, got {sigma2}")
    return sigma2 * (N - n) / (n * (N - 1))


def brute_force_sample_variance(pop: Population, n: int) -> float:
    """Variance of the sample mean over every size-n subset of the population."""
    N = pop.N
    if not 1 <= n <= N:
        raise SamplingError(f"sample size n must be in [1, {N}], got {n}")
    count = math.comb(N, n)
    if count > ENUMERATION_LIMIT:
        raise SamplingError(f"C({N},{n}) = {count} subsets exceeds {ENUMERATION_LIMIT}")
    mu = pop.mean
    deviations = (
        (math.fsum(subset) / n - mu) ** 2
        for subset in itertools.combinations(pop.values, n)
    )
    return math.fsum(deviations) / count


def normal_cdf(u: float) -> float:
    return float(special.ndtr(u))


def _lower_tail_quantile(q: float) -> float:
    if q < _P_LOW:
        r = math.sqrt(-2.0 * math.log(q))
        num = ((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]
        den = (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
        u = num / den
    else:
        s = q - 0.5
        r = s * s
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        u = num / den
    # Newton refinement on Phi(u) = q
    density = math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
    return u - (normal_cdf(u) - q) / density


def inverse_normal_cdf(p: float) -> float:
    """
    Standard normal quantile.

    The lower tail is evaluated directly and the upper tail by reflection, so
    inverse_normal_cdf(1 - p) == -inverse_normal_cdf(p) whenever 1 - p is exact.
    """
    if not 0.0 < p < 1.0:
        raise SamplingError(f"p must be in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -_lower_tail_quantile(1.0 - p)
    return _lower_tail_quantile(p)


def required_sample_size(N: int, spec: ConfidenceSpec, s2: float) -> int:
    """Smallest n with |sample mean - population mean| < delta at confidence 1 - alpha."""
    if N < 1:
        raise SamplingError(f"N must be >= 1, got {N}")
    if spec.delta <= 0 or s2 <= 0:
        raise SamplingError("delta and s2 must be positive")
    u2 = spec.u_half_alpha ** 2
    n = N * u2 * s2 / (spec.delta ** 2 * N + u2 * s2)
    return min(max(math.ceil(n), 1), N)


def estimate_gamma(N: int, alpha: float, xi: float, zeta: int) -> int:
    """Least number of worker responses for a relative error xi at confidence 1 - alpha."""
    if N < 1 or zeta < 1:
        raise SamplingError(f"N and zeta must be >= 1, got N={N}, zeta={zeta}")
    if xi <= 0:
        raise SamplingError(f"xi must be > 0, got {xi}")
    if not 0.0 < alpha < 1.0:
        raise SamplingError(f"alpha must be in (0, 1), got {alpha}")
    u2 = inverse_normal_cdf(1.0 - alpha / 2.0) ** 2
    gamma = N * u2 / ((xi * xi * N + u2) * zeta)
    return min(max(math.ceil(gamma), 1), math.ceil(N / zeta))


def estimate_gamma_from_variance(
    N: int, spec: ConfidenceSpec, s2: float, zeta: int
) -> int:
    """Worker count from the explicit-variance sample size, ceil(n / zeta)."""
    if zeta < 1:
        raise SamplingError(f"zeta must be >= 1, got {zeta}")
    n = required_sample_size(N, spec, s2)
    return min(max(math.ceil(n / zeta), 1), math.ceil(N / zeta))


def coverage_probe(
    pop: Population, n: int, delta: float, trials: int, seed: int
) -> float:
    """Fraction of size-n samples (without replacement) whose mean is within delta of the population mean."""
    if n > pop.N or n < 1:
        raise SamplingError(f"sample size n must be in [1, {pop.N}], got {n}")
    if trials < 1:
        raise SamplingError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    values = np.asarray(pop.values, dtype=np.float64)
    mu = pop.mean
    hits = 0
    for _ in range(trials):
        sample = rng.choice(pop.N, size=n, replace=False)
        # same exactly rounded sum as Population.mean, so n = N hits exactly
        if abs(math.fsum(values[sample].tolist()) / n - mu) < delta:
            hits += 1
    logger.debug(f"coverage_probe n={n} delta={delta}: {hits}/{trials}")
    return hits / trials
