import heapq
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from numpy.random import Generator

from ..config.base import LatencyModel
from ..features import gradient
from ..schema.data import Dataset
from ..types.enums import FailureMode, WorkerStatus
from .streams import StreamFactory

logger = logging.getLogger(__name__)

PayloadFn = Callable[[np.ndarray, Dataset, float], np.ndarray]

LATENCY_STREAM = "latency"


class ShardingError(ValueError):
    def __init__(self, m: int, M: int) -> None:
        self.m = m
        self.M = M
        super().__init__(
            f"cannot shard m={m} examples over M={M} workers: m must be divisible by M"
        )


class StarvationError(RuntimeError):
    """Fewer than gamma workers answered in a round."""

    def __init__(
        self, responded: int, required: int, iteration: Optional[int] = None
    ) -> None:
        self.responded = responded
        self.required = required
        self.iteration = iteration
        where = "" if iteration is None else f" at iteration {iteration}"
        super().__init__(
            f"starvation{where}: {responded} of the required {required} workers responded"
        )


class PayloadTaintError(RuntimeError):
    def __init__(self, worker_id: int) -> None:
        self.worker_id = worker_id
        super().__init__(f"payload from abandoned worker {worker_id} reached the master")


@dataclass
class WorkerState:
    """
    Attributes:
        id: Worker index in [0, M).
        shard: The zeta examples owned by this worker.
        seed: Stream key of this worker's latency generator.
    """

    id: int
    shard: Dataset
    seed: Tuple[str, int]
    rng: Generator = field(repr=False)
    status: WorkerStatus = WorkerStatus.IDLE

    @property
    def active(self) -> bool:
        return self.status != WorkerStatus.REMOVED


@dataclass(eq=False)
class Payload:
    worker_id: int
    vector: np.ndarray
    arrival_time: float
    abandoned: bool = False

    def poison(self) -> None:
        """Overwrite the buffer with NaN so any later use becomes visible."""
        self.vector = np.full_like(self.vector, np.nan)


@dataclass(eq=False)
class RoundOutcome:
    """
    Result of one broadcast/collect round.

    Attributes:
        responders: Worker ids in arrival order (exactly gamma of them).
        arrival_times: Absolute simulated arrival time of each responder.
        round_duration: gamma-th smallest round-trip time.
        abandoned: Ids of workers that finished after the barrier released.
        failed: Ids of workers that never answered this round.
        payloads: Responder payloads in arrival order.
        late_payloads: Payloads of abandoned workers, flagged as abandoned.
        round_trips: Round-trip time per worker id (inf for failed workers).
    """

    responders: List[int]
    arrival_times: List[float]
    round_duration: float
    abandoned: List[int]
    failed: List[int]
    payloads: List[Payload]
    late_payloads: List[Payload] = field(default_factory=list)
    round_trips: Dict[int, float] = field(default_factory=dict)
    start: float = 0.0

    @property
    def end(self) -> float:
        return self.start + self.round_duration


def assign_shards(data: Dataset, M: int, root_seed: int = 0) -> List[WorkerState]:
    """Split the dataset into M contiguous blocks of zeta = m / M examples."""
    if M < 1 or data.m % M != 0:
        raise ShardingError(data.m, M)
    zeta = data.m // M
    streams = StreamFactory(root_seed)
    return [
        WorkerState(
            id=j,
            shard=data.block(j * zeta, (j + 1) * zeta),
            seed=(LATENCY_STREAM, j),
            rng=streams.generator(LATENCY_STREAM, j),
        )
        for j in range(M)
    ]


def draw_round_trip(
    model: LatencyModel, zeta: int, worker_id: int, rng: Generator
) -> float:
    """
    One round-trip time for a worker; inf when the worker fails this round.

    Three draws are consumed every call so the stream stays aligned whatever
    the outcome.
    """
    jitter = rng.lognormal(mean=model.jitter_log_mu, sigma=model.jitter_log_sigma)
    straggling = rng.random() < model.straggle_prob
    failed = rng.random() < model.fail_prob
    if failed:
        return float("inf")
    speed = 1.0 if model.fixed_speeds is None else model.fixed_speeds[worker_id]
    compute = model.base_per_example * zeta * jitter * speed
    if straggling:
        compute *= model.straggle_factor
    return 2.0 * model.rtt + compute


def _compute_payloads(
    theta: np.ndarray,
    workers: Dict[int, WorkerState],
    ids: List[int],
    lam: float,
    payload_fn: PayloadFn,
    executor: Optional[ThreadPoolExecutor],
) -> Dict[int, np.ndarray]:
    if executor is None:
        return {j: payload_fn(theta, workers[j].shard, lam) for j in ids}
    futures = {j: executor.submit(payload_fn, theta, workers[j].shard, lam) for j in ids}
    return {j: futures[j].result() for j in ids}


def simulate_round(
    theta: np.ndarray,
    workers: List[WorkerState],
    model: LatencyModel,
    gamma: int,
    lam: float,
    clock: float = 0.0,
    payload_fn: PayloadFn = gradient,
    executor: Optional[ThreadPoolExecutor] = None,
) -> RoundOutcome:
    """
    Broadcast theta, draw every worker's round trip, release after gamma arrivals.

    Each worker draws from its own stream (`WorkerState.rng`), so outcomes are
    bit-identical for identical seeds. Ties in arrival time go to the lower id.
    """
    active = [w for w in workers if w.active]
    if not 1 <= gamma <= len(workers):
        raise ValueError(f"gamma must be in [1, {len(workers)}], got {gamma}")

    events: List[Tuple[float, int]] = []
    round_trips: Dict[int, float] = {}
    failed: List[int] = []
    for w in active:
        rt = draw_round_trip(model, w.shard.m, w.id, w.rng)
        round_trips[w.id] = rt
        if np.isinf(rt):
            failed.append(w.id)
            w.status = WorkerStatus.FAILED
            if model.failure_mode == FailureMode.PERMANENT:
                w.status = WorkerStatus.REMOVED
                logger.warning(f"Worker {w.id} failed permanently")
        else:
            heapq.heappush(events, (rt, w.id))

    if len(events) < gamma:
        raise StarvationError(responded=len(events), required=gamma)

    arrivals = [heapq.heappop(events) for _ in range(gamma)]
    late = sorted(events)
    responders = [j for _, j in arrivals]
    abandoned = [j for _, j in late]
    round_duration = arrivals[-1][0]

    by_id = {w.id: w for w in active}
    vectors = _compute_payloads(
        theta, by_id, responders + abandoned, lam, payload_fn, executor
    )
    payloads = [
        Payload(worker_id=j, vector=vectors[j], arrival_time=clock + rt)
        for rt, j in arrivals
    ]
    late_payloads = [
        Payload(worker_id=j, vector=vectors[j], arrival_time=clock + rt, abandoned=True)
        for rt, j in late
    ]
    for j in responders:
        by_id[j].status = WorkerStatus.RESPONDED
    for j in abandoned:
        by_id[j].status = WorkerStatus.ABANDONED

    logger.debug(
        f"Round at t={clock:.6g}: responders={responders} duration={round_duration:.6g}"
    )
    return RoundOutcome(
        responders=responders,
        arrival_times=[p.arrival_time for p in payloads],
        round_duration=round_duration,
        abandoned=abandoned,
        failed=failed,
        payloads=payloads,
        late_payloads=late_payloads,
        round_trips=round_trips,
        start=clock,
    )


class ClusterSimulator:
    """Master-side view of the cluster: workers, latency model and the virtual clock."""

    def __init__(
        self,
        workers: List[WorkerState],
        model: LatencyModel,
        parallel_workers: int = 0,
    ) -> None:
        self.workers = workers
        self.model = model
        self.clock = 0.0
        self._executor = (
            ThreadPoolExecutor(max_workers=parallel_workers) if parallel_workers > 0 else None
        )

    @classmethod
    def from_dataset(
        cls,
        data: Dataset,
        M: int,
        model: LatencyModel,
        root_seed: int = 0,
        parallel_workers: int = 0,
    ) -> "ClusterSimulator":
        return cls(assign_shards(data, M, root_seed), model, parallel_workers)

    @property
    def M(self) -> int:
        return len(self.workers)

    def round(
        self, theta: np.ndarray, gamma: int, lam: float, payload_fn: PayloadFn = gradient
    ) -> RoundOutcome:
        outcome = simulate_round(
            theta,
            self.workers,
            self.model,
            gamma,
            lam,
            clock=self.clock,
            payload_fn=payload_fn,
            executor=self._executor,
        )
        self.clock = outcome.end
        return outcome

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "ClusterSimulator":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()
