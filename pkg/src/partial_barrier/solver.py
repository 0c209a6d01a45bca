"""Partial-barrier gradient descent: worker step, master update and the run loop."""

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np
from rx.subject import Subject

from .cluster.core import (ClusterSimulator, Payload, PayloadTaintError,
                           ShardingError, StarvationError)
from .config.base import ClusterSpec
from .config.model import GammaPolicy, SolverConfig, feature_dim
from .features import (DimensionMismatchError, NumericalFailureError,
                       compute_bounds, descent_check, gradient, objective)
from .sampling import (ConfidenceSpec, estimate_gamma,
                       estimate_gamma_from_variance)
from .schema.data import DataBounds, Dataset
from .schema.trace import IterationRecord
from .types.enums import GammaMode, PayloadMode

logger = logging.getLogger(__name__)


class GammaRangeError(ValueError):
    def __init__(self, gamma: int, M: int) -> None:
        self.gamma = gamma
        self.M = M
        super().__init__(f"gamma={gamma} outside [1, M={M}]")


def worker_step(theta: np.ndarray, shard: Dataset, lam: float) -> np.ndarray:
    """B_j = (1/zeta) sum_{i in shard} (theta . K[x_i] - y_i) K[x_i] + lam * theta."""
    return gradient(theta, shard, lam)


def parameter_step(theta: np.ndarray, shard: Dataset, lam: float) -> np.ndarray:
    """Worker sends its locally updated parameters theta - B_j."""
    return theta - gradient(theta, shard, lam)


PAYLOAD_FUNCTIONS: dict = {
    PayloadMode.GRADIENT: worker_step,
    PayloadMode.PARAMETERS: parameter_step,
}


def reduce_payloads(payloads: Sequence[np.ndarray], length: int) -> np.ndarray:
    """Coordinate-wise exactly rounded sum, consumed in the given (arrival) order."""
    for vec in payloads:
        if np.shape(vec) != (length,):
            raise DimensionMismatchError("payload", length, int(np.size(vec)))
    columns = np.asarray(payloads, dtype=np.float64).T
    try:
        return np.array([math.fsum(col) for col in columns.tolist()], dtype=np.float64)
    except (OverflowError, ValueError):
        # non-finite payloads; the run loop reports the divergence
        return columns.sum(axis=1)


def master_update(
    theta: np.ndarray, payloads: Sequence[np.ndarray], eta: float, gamma: int
) -> np.ndarray:
    """theta - (eta / gamma) * sum(payloads)."""
    if gamma < 1 or len(payloads) != gamma:
        raise ValueError(f"expected gamma={gamma} payloads, got {len(payloads)}")
    theta = np.asarray(theta, dtype=np.float64)
    return theta - (eta / gamma) * reduce_payloads(payloads, theta.shape[0])


def master_update_from_payloads(
    theta: np.ndarray, payloads: Sequence[Payload], eta: float, gamma: int
) -> np.ndarray:
    for p in payloads:
        if p.abandoned:
            raise PayloadTaintError(p.worker_id)
    return master_update(theta, [p.vector for p in payloads], eta, gamma)


def has_converged(record: IterationRecord, cfg: SolverConfig) -> bool:
    return record.grad_norm <= cfg.tol or record.t >= cfg.t_max


def default_eta(bounds: DataBounds, lam: float) -> float:
    """1 / (lam + lip_hat): at most 1/lam and below the inverse curvature of the objective."""
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    return 1.0 / (lam + bounds.lip_hat)


def resolve_gamma(policy: GammaPolicy, m: int, M: int) -> int:
    zeta = m // M
    if policy.mode == GammaMode.EXPLICIT:
        gamma = int(policy.gamma)
    elif policy.mode == GammaMode.ALGORITHM1:
        gamma = estimate_gamma(m, policy.alpha, policy.xi, zeta)
    else:
        s = math.sqrt(policy.variance)
        spec = ConfidenceSpec(alpha=policy.alpha, xi=policy.xi, delta=policy.xi * s)
        gamma = estimate_gamma_from_variance(m, spec, policy.variance, zeta)
    if not 1 <= gamma <= M:
        raise GammaRangeError(gamma, M)
    return gamma


def resolve_eta(data: Dataset, cfg: SolverConfig) -> float:
    if cfg.eta is not None:
        return cfg.eta
    return default_eta(compute_bounds(data), cfg.lam)


def _record(
    t: int,
    sim_time: float,
    theta: np.ndarray,
    full_grad: np.ndarray,
    data: Dataset,
    lam: float,
    gamma: int,
    theta_star: Optional[np.ndarray],
    **extra,
) -> IterationRecord:
    return IterationRecord(
        t=t,
        sim_time=sim_time,
        theta=theta,
        objective=objective(theta, data, lam),
        grad_norm=float(np.linalg.norm(full_grad)),
        gamma=gamma,
        dist_to_opt=None if theta_star is None else float(np.linalg.norm(theta - theta_star)),
        **extra,
    )


def run(
    data: Dataset,
    cluster: ClusterSpec,
    cfg: SolverConfig,
    seed: int = 0,
    gamma: Optional[int] = None,
    theta_star: Optional[np.ndarray] = None,
    observer: Optional[Subject] = None,
    parallel_workers: int = 0,
) -> List[IterationRecord]:
    """
    Iterate simulate_round -> master_update from theta = 0 until has_converged.

    Args:
        gamma: Overrides the config's gamma policy (used for the gamma = M baseline).
        theta_star: Optimum used to fill `dist_to_opt`.
        observer: Subject that receives each IterationRecord as it is produced.
        parallel_workers: Thread-pool size for worker payloads; 0 runs them serially.
    """
    if data.m % cluster.M != 0:
        raise ShardingError(data.m, cluster.M)
    cluster.check_examples(data.m)
    lam = cfg.lam
    M = cluster.M
    gamma = gamma if gamma is not None else resolve_gamma(cfg.gamma_policy, data.m, M)
    if not 1 <= gamma <= M:
        raise GammaRangeError(gamma, M)
    eta = resolve_eta(data, cfg)
    payload_fn: Callable = PAYLOAD_FUNCTIONS[cfg.payload_mode]
    logger.info(
        f"Run: m={data.m} n={data.n} M={M} gamma={gamma} lam={lam} eta={eta:.6g} "
        f"t_max={cfg.t_max} mode={cfg.payload_mode.value}"
    )

    theta = np.zeros(feature_dim(data.n))
    full_grad = gradient(theta, data, lam)
    record = _record(0, 0.0, theta, full_grad, data, lam, gamma, theta_star)
    trace = [record]
    if observer is not None:
        observer.on_next(record)

    with ClusterSimulator.from_dataset(
        data, M, cluster.latency, root_seed=seed, parallel_workers=parallel_workers
    ) as sim:
        t = 0
        while not has_converged(record, cfg):
            t += 1
            try:
                outcome = sim.round(theta, gamma, lam, payload_fn)
            except StarvationError as e:
                logger.error(f"Starvation at iteration {t}: {str(e)}")
                if observer is not None:
                    observer.on_error(e)
                raise StarvationError(e.responded, e.required, iteration=t) from e

            aggregate = reduce_payloads(
                [p.vector for p in outcome.payloads], theta.shape[0]
            ) / gamma
            descent = descent_check(full_grad, aggregate)
            theta = master_update_from_payloads(theta, outcome.payloads, eta, gamma)
            full_grad = gradient(theta, data, lam)

            if not (np.isfinite(theta).all() and np.isfinite(full_grad).all()):
                err = NumericalFailureError("iterate diverged", iteration=t, trace=trace)
                logger.error(str(err))
                if observer is not None:
                    observer.on_error(err)
                raise err

            record = _record(
                t,
                sim.clock,
                theta,
                full_grad,
                data,
                lam,
                gamma,
                theta_star,
                responders=tuple(outcome.responders),
                round_duration=outcome.round_duration,
                aggregate=aggregate,
                descent_product=descent,
            )
            if not math.isfinite(record.objective):
                err = NumericalFailureError("objective diverged", iteration=t, trace=trace)
                if observer is not None:
                    observer.on_error(err)
                raise err
            trace.append(record)
            if observer is not None:
                observer.on_next(record)

    if observer is not None:
        observer.on_completed()
    last = trace[-1]
    logger.info(
        f"Run finished after {last.t} iterations: objective={last.objective:.6g} "
        f"grad_norm={last.grad_norm:.3e} sim_time={last.sim_time:.6g}"
    )
    return trace


def full_batch_reference(
    data: Dataset, M: int, cfg: SolverConfig, t_max: int
) -> List[np.ndarray]:
    """Serial full-batch iterates theta_0..theta_{t_max}, reduced the same way as the master."""
    if data.m % M != 0:
        raise ValueError(f"m={data.m} not divisible by M={M}")
    zeta = data.m // M
    shards = [data.block(j * zeta, (j + 1) * zeta) for j in range(M)]
    eta = resolve_eta(data, cfg)
    payload_fn = PAYLOAD_FUNCTIONS[cfg.payload_mode]
    theta = np.zeros(feature_dim(data.n))
    iterates = [theta]
    for _ in range(t_max):
        theta = master_update(theta, [payload_fn(theta, s, cfg.lam) for s in shards], eta, M)
        iterates.append(theta)
    return iterates
