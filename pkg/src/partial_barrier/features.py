"""Quadratic feature map, regularized least-squares objective and its oracle solver."""

import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from .config.model import feature_dim
from .schema.data import DataBounds, Dataset, Example

logger = logging.getLogger(__name__)

__all__ = [
    "DimensionMismatchError",
    "EmptySubsetError",
    "NumericalFailureError",
    "feature_dim",
    "kernel_map",
    "kernel_matrix",
    "objective",
    "gradient",
    "descent_check",
    "solve_closed_form",
    "compute_bounds",
]


class DimensionMismatchError(ValueError):
    def __init__(self, what: str, expected: int, actual: int) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected length {expected}, got {actual}")


class EmptySubsetError(ValueError):
    def __init__(self) -> None:
        super().__init__("gradient needs a nonempty subset of examples")


class NumericalFailureError(ArithmeticError):
    """Raised when a solve or an iteration stops producing finite numbers."""

    def __init__(
        self,
        message: str,
        condition_estimate: Optional[float] = None,
        iteration: Optional[int] = None,
        trace: Optional[List] = None,
    ) -> None:
        self.condition_estimate = condition_estimate
        self.iteration = iteration
        self.trace = trace or []
        if condition_estimate is not None:
            message = f"{message} (condition estimate {condition_estimate:.3e})"
        if iteration is not None:
            message = f"{message} at iteration {iteration}"
        super().__init__(message)


def kernel_map(x: Sequence[float], n: Optional[int] = None) -> np.ndarray:
    """
    Expand x into [x_j * x_k for j <= k (grouped by j), x_1..x_n, 1].

    Args:
        x: Input vector.
        n: Expected input dimension; checked when given.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if n is not None and x.shape[0] != n:
        raise DimensionMismatchError("kernel_map input", n, x.shape[0])
    return kernel_matrix(x.reshape(1, -1))[0]


def kernel_matrix(X: np.ndarray) -> np.ndarray:
    """Row i is kernel_map(X[i])."""
    X = np.asarray(X, dtype=np.float64)
    m, n = X.shape
    # triu_indices walks (0,0),(0,1),..,(0,n-1),(1,1),.. which is the grouping we need
    rows, cols = np.triu_indices(n)
    Phi = np.empty((m, feature_dim(n)), dtype=np.float64)
    q = rows.shape[0]
    Phi[:, :q] = X[:, rows] * X[:, cols]
    Phi[:, q:q + n] = X
    Phi[:, -1] = 1.0
    return Phi


def _check_theta(theta: np.ndarray, n: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    l = feature_dim(n)  # noqa: E741
    if theta.shape[0] != l:
        raise DimensionMismatchError("theta", l, theta.shape[0])
    return theta


def objective(theta: np.ndarray, data: Dataset, lam: float) -> float:
    """(1/m) * sum_i (theta . K[x_i] - y_i)^2 + lam * ||theta||^2."""
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    theta = _check_theta(theta, data.n)
    residual = kernel_matrix(data.X) @ theta - data.y
    # fsum is exactly rounded, so the value does not depend on example order
    try:
        data_term = math.fsum((residual * residual).tolist()) / data.m
        return data_term + lam * math.fsum((theta * theta).tolist())
    except OverflowError:
        return math.inf


def gradient(
    theta: np.ndarray, subset: Union[Dataset, Sequence[Example]], lam: float
) -> np.ndarray:
    """
    (1/|S|) * sum_{i in S} (theta . K[x_i] - y_i) K[x_i] + lam * theta.

    This is the update direction of the iteration, i.e. one half of the
    derivative of `objective` restricted to S.
    """
    if subset is None or len(subset) == 0:
        raise EmptySubsetError()
    if not isinstance(subset, Dataset):
        subset = Dataset.from_examples(subset)
    theta = _check_theta(theta, subset.n)
    Phi = kernel_matrix(subset.X)
    residual = Phi @ theta - subset.y
    return (Phi.T @ residual) / subset.m + lam * theta


def descent_check(full_grad: np.ndarray, partial_agg: np.ndarray) -> float:
    """Inner product of the full gradient with the partial aggregate; positive means descent."""
    full_grad = np.asarray(full_grad, dtype=np.float64).reshape(-1)
    partial_agg = np.asarray(partial_agg, dtype=np.float64).reshape(-1)
    if full_grad.shape != partial_agg.shape:
        raise DimensionMismatchError("partial aggregate", full_grad.shape[0], partial_agg.shape[0])
    return float(np.dot(full_grad, partial_agg))


def solve_closed_form(data: Dataset, lam: float) -> np.ndarray:
    """Solve (Phi^T Phi / m + lam I) theta = Phi^T y / m by Cholesky factorization."""
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    Phi = kernel_matrix(data.X)
    A = (Phi.T @ Phi) / data.m + lam * np.eye(Phi.shape[1])
    b = (Phi.T @ data.y) / data.m
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=True)
        theta = linalg.cho_solve(factor, b)
        # one step of iterative refinement
        theta = theta + linalg.cho_solve(factor, b - A @ theta)
    except (linalg.LinAlgError, ValueError) as e:
        cond = float(np.linalg.cond(A))
        logger.error(f"Closed-form solve failed: {str(e)}")
        raise NumericalFailureError("closed-form solve failed", condition_estimate=cond)
    if not np.isfinite(theta).all():
        raise NumericalFailureError(
            "closed-form solve produced non-finite values",
            condition_estimate=float(np.linalg.cond(A)),
        )
    return theta


def compute_bounds(data: Dataset) -> DataBounds:
    Phi = kernel_matrix(data.X)
    return DataBounds(
        k_max=float(np.max(np.abs(Phi))),
        y_max=float(np.max(np.abs(data.y))),
        lip_hat=float(np.max(np.sum(Phi * Phi, axis=1))),
    )
