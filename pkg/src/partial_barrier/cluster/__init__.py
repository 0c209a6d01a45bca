from .core import (ClusterSimulator, Payload, PayloadTaintError, RoundOutcome,
                   ShardingError, StarvationError, WorkerState, assign_shards,
                   draw_round_trip, simulate_round)
from .probes import expected_speedup_probe
from .streams import StreamFactory, make_rng

__all__ = [
    'ClusterSimulator',
    'Payload',
    'PayloadTaintError',
    'RoundOutcome',
    'ShardingError',
    'StarvationError',
    'WorkerState',
    'assign_shards',
    'draw_round_trip',
    'simulate_round',
    'expected_speedup_probe',
    'StreamFactory',
    'make_rng',
]
