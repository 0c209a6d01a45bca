"""Common test fixtures and configurations."""
import json

import numpy as np
import pytest

from partial_barrier.config.base import ClusterSpec, LatencyModel
from partial_barrier.io import generate_synthetic
from partial_barrier.schema.data import Dataset


@pytest.fixture
def rng():
    """Seeded generator for property tests."""
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny_dataset():
    """One example x=(1), y=3; the optimum at lam=1 is (3/4, 3/4, 3/4)."""
    return Dataset(X=np.array([[1.0]]), y=np.array([3.0]))


@pytest.fixture
def small_dataset():
    """Noisy synthetic data, n=2 and m=200."""
    data, _ = generate_synthetic(n=2, m=200, seed=7, noise_sd=0.1)
    return data


@pytest.fixture
def straggler_cluster():
    """50 workers of 20 examples; one round in ten is ten times slower."""
    return ClusterSpec(
        M=50,
        zeta=20,
        latency=LatencyModel(
            base_per_example=0.01,
            jitter_log_sigma=0.25,
            straggle_prob=0.1,
            straggle_factor=10.0,
        ),
    )


def write_config(path, **overrides):
    document = {
        "dataset": {"synthetic": {"n": 2, "m": 200, "seed": 7, "noise_sd": 0.1}},
        "cluster": {
            "M": 10,
            "zeta": 20,
            "latency": {
                "base_per_example": 0.01,
                "jitter_log_sigma": 0.25,
                "straggle_prob": 0.1,
                "straggle_factor": 10.0,
                "rtt": 0.001,
            },
        },
        "solver": {"lam": 0.1, "eta": None, "t_max": 20000, "tol": 1e-8},
        "gamma": {"mode": "algorithm1", "alpha": 0.05, "xi": 0.05},
        "seed": 0,
        "output_dir": str(path.parent / "out"),
    }
    for key, value in overrides.items():
        document[key] = value
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


@pytest.fixture
def run_config_file(tmp_path):
    """A valid JSON run configuration on disk."""
    return write_config(tmp_path / "config.json")


@pytest.fixture
def config_writer(tmp_path):
    """Writes a run configuration with top-level blocks replaced by the keyword arguments."""

    def write(name="config.json", **overrides):
        return write_config(tmp_path / name, **overrides)

    return write
