import logging
import math

import numpy as np

from ..config.base import LatencyModel
from .streams import make_rng

logger = logging.getLogger(__name__)

PROBE_STREAM = "speedup_probe"


def expected_speedup_probe(
    model: LatencyModel,
    M: int,
    gamma: int,
    trials: int,
    seed: int,
    zeta: int = 1,
) -> float:
    """
    Monte-Carlo estimate of E[max round trip] / E[gamma-th smallest round trip].

    Failures are not drawn here: a failed worker has an infinite round trip and
    would make the full-barrier expectation infinite.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 1 <= gamma <= M:
        raise ValueError(f"gamma must be in [1, {M}], got {gamma}")
    rng = make_rng(seed, PROBE_STREAM)
    jitter = rng.lognormal(mean=model.jitter_log_mu, sigma=model.jitter_log_sigma, size=(trials, M))
    straggling = rng.random(size=(trials, M)) < model.straggle_prob
    speeds = np.ones(M) if model.fixed_speeds is None else np.asarray(model.fixed_speeds)
    compute = model.base_per_example * zeta * jitter * speeds
    compute = np.where(straggling, compute * model.straggle_factor, compute)
    times = np.sort(2.0 * model.rtt + compute, axis=1)

    full_barrier = math.fsum(times[:, -1].tolist()) / trials
    partial_barrier = math.fsum(times[:, gamma - 1].tolist()) / trials
    if partial_barrier == 0.0:
        return 1.0
    ratio = full_barrier / partial_barrier
    logger.debug(f"Speedup probe M={M} gamma={gamma} trials={trials}: {ratio:.4f}")
    return ratio
