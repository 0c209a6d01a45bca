"""Numerical checks of the convergence analysis along a solver trace."""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..features import descent_check, gradient, objective  # noqa: F401  re-exported
from ..sampling import inverse_normal_cdf, sample_mean_variance
from ..schema.data import DataBounds, Dataset
from ..schema.trace import IterationRecord

logger = logging.getLogger(__name__)

MIN_BURN_IN = 5
BURN_IN_FRACTION = 0.1


class RateReport(BaseModel):
    """
    Attributes:
        ratios: ||theta_{t+1} - theta*|| / ||theta_t - theta*|| per step (0 once the optimum is hit).
        fitted_q: Geometric mean of the ratios after burn-in.
        burn_in: Number of leading ratios excluded from the fit.
        violations: Steps t where the contraction inequality failed.
    """

    ratios: List[float] = Field(default_factory=list)
    fitted_q: float = Field(ge=0)
    burn_in: int = Field(ge=0)
    violations: List[int] = Field(default_factory=list)
    lhs: List[float] = Field(default_factory=list)
    rhs: List[float] = Field(default_factory=list)

    @property
    def fraction_contracting(self) -> float:
        window = self.ratios[self.burn_in:]
        if not window:
            return 1.0
        return sum(1 for r in window if r < 1.0) / len(window)


def strong_convexity_gap(
    theta: np.ndarray, theta_star: np.ndarray, data: Dataset, lam: float
) -> float:
    """[f(theta) - f(theta*)] - lam * ||theta - theta*||^2, which should be >= 0."""
    diff = np.asarray(theta) - np.asarray(theta_star)
    return (
        objective(theta, data, lam)
        - objective(theta_star, data, lam)
        - lam * float(np.dot(diff, diff))
    )


def inner_product_bound_check(
    theta_t: np.ndarray, theta_star: np.ndarray, b_t: np.ndarray, lam: float
) -> float:
    """<theta* - theta_t, B_t> + (lam/2) ||theta_t - theta*||^2, which should be <= 0 for full batches."""
    diff = np.asarray(theta_t) - np.asarray(theta_star)
    return float(np.dot(-diff, b_t)) + 0.5 * lam * float(np.dot(diff, diff))


def theta_norm_bound(bounds: DataBounds, lam: float, l: int) -> float:  # noqa: E741
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    return bounds.y_max * bounds.k_max / (lam * l)


def relaxed_theta_norm_bound(bounds: DataBounds, lam: float) -> float:
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    return bounds.y_max * bounds.k_max / lam


def bt_norm_bound(bounds: DataBounds, lam: float, l: int) -> float:  # noqa: E741
    """y k^3 / lam + sqrt(l) y k + y k / l."""
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    y, k = bounds.y_max, bounds.k_max
    return y * k ** 3 / lam + math.sqrt(l) * y * k + y * k / l


def _burn_in(steps: int, burn_in: Optional[int]) -> int:
    if burn_in is None:
        burn_in = max(MIN_BURN_IN, math.ceil(BURN_IN_FRACTION * steps))
    return max(0, min(burn_in, steps - 1))


def _geometric_mean(values: Sequence[float]) -> float:
    if not values:
        return 0.0
    if any(v <= 0.0 for v in values):
        return 0.0
    if not all(math.isfinite(v) for v in values):
        return math.inf
    return math.exp(math.fsum(math.log(v) for v in values) / len(values))


def contraction_check(
    trace: Sequence[IterationRecord],
    theta_star: np.ndarray,
    eta: float,
    lam: float,
    bounds: DataBounds,
    l: int,  # noqa: E741
    burn_in: Optional[int] = None,
    rtol: float = 1e-12,
) -> RateReport:
    """
    Check ||e_{t+1}||^2 <= (1 - lam eta) ||e_t||^2 + eta^2 C^2 at every step
    and fit the Q-linear rate over the post-burn-in ratios.
    """
    if len(trace) < 2:
        raise ValueError(f"contraction_check needs at least 2 records, got {len(trace)}")
    C = bt_norm_bound(bounds, lam, l)
    dists = [float(np.linalg.norm(r.theta - theta_star)) for r in trace]

    ratios: List[float] = []
    violations: List[int] = []
    lhs: List[float] = []
    rhs: List[float] = []
    for t in range(len(dists) - 1):
        before, after = dists[t], dists[t + 1]
        ratios.append(0.0 if before == 0.0 else after / before)
        left = after * after
        right = (1.0 - lam * eta) * before * before + eta * eta * C * C
        lhs.append(left)
        rhs.append(right)
        if left > right + rtol * max(1.0, abs(right)):
            violations.append(trace[t].t)

    skip = _burn_in(len(ratios), burn_in)
    report = RateReport(
        ratios=ratios,
        fitted_q=_geometric_mean(ratios[skip:]),
        burn_in=skip,
        violations=violations,
        lhs=lhs,
        rhs=rhs,
    )
    if violations:
        logger.warning(f"Contraction inequality failed at {len(violations)} steps")
    return report


def finite_diff_gradient(
    theta: np.ndarray, data: Dataset, lam: float, h: float = 1e-5
) -> np.ndarray:
    """Central differences of `objective`, step h * (1 + |theta_j|) per coordinate."""
    if h <= 0:
        raise ValueError(f"h must be > 0, got {h}")
    theta = np.asarray(theta, dtype=np.float64)
    out = np.empty_like(theta)
    for j in range(theta.shape[0]):
        step = h * (1.0 + abs(theta[j]))
        up = theta.copy()
        down = theta.copy()
        up[j] += step
        down[j] -= step
        out[j] = (objective(up, data, lam) - objective(down, data, lam)) / (up[j] - down[j])
    return out


def aggregate_noise_floor(
    data: Dataset, M: int, gamma: int, lam: float, theta: np.ndarray, alpha: float
) -> float:
    """
    Gradient norm below which a partial aggregate may point uphill.

    The aggregate is the mean of gamma of the M shard gradients, drawn without
    replacement. Its deviation from the full gradient has total variance
    sum_c sigma_c^2 (M - gamma) / (gamma (M - 1)), with sigma_c^2 the spread of
    coordinate c over the shards at `theta`. While the full gradient norm stays
    above u_{1-alpha} times that deviation, each round descends with probability
    at least 1 - alpha.
    """
    if data.m % M != 0:
        raise ValueError(f"m={data.m} not divisible by M={M}")
    if not 1 <= gamma <= M:
        raise ValueError(f"gamma={gamma} outside [1, M={M}]")
    if gamma == M:
        return 0.0
    zeta = data.m // M
    shard_grads = np.array(
        [gradient(theta, data.block(j * zeta, (j + 1) * zeta), lam) for j in range(M)]
    )
    spread = shard_grads.var(axis=0)
    noise = math.sqrt(math.fsum(sample_mean_variance(M, gamma, float(v)) for v in spread))
    return inverse_normal_cdf(1.0 - alpha) * noise
