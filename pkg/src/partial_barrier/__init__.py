from .cluster import ClusterSimulator, StarvationError, expected_speedup_probe
from .config.base import ClusterSpec, LatencyModel
from .config.model import GammaPolicy, ModelSpec, SolverConfig, feature_dim
from .diagnostics import VerificationSuite, contraction_check
from .features import (NumericalFailureError, compute_bounds, gradient,
                       kernel_map, objective, solve_closed_form)
from .io import generate_synthetic, load_dataset_csv
from .sampling import estimate_gamma, required_sample_size
from .schema import Dataset, IterationRecord
from .solver import master_update, run, worker_step
from .types.enums import FailureMode, GammaMode, PayloadMode

__all__ = [
    "ClusterSimulator",
    "ClusterSpec",
    "LatencyModel",
    "GammaPolicy",
    "ModelSpec",
    "SolverConfig",
    "Dataset",
    "IterationRecord",
    "StarvationError",
    "NumericalFailureError",
    "VerificationSuite",
    "FailureMode",
    "GammaMode",
    "PayloadMode",
    "feature_dim",
    "kernel_map",
    "objective",
    "gradient",
    "solve_closed_form",
    "compute_bounds",
    "estimate_gamma",
    "required_sample_size",
    "generate_synthetic",
    "load_dataset_csv",
    "expected_speedup_probe",
    "master_update",
    "worker_step",
    "run",
    "contraction_check",
]

__version__ = "0.1.0"
