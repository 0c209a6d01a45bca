"""The run configuration document."""

import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from pydantic import (BaseModel, ConfigDict, Field, ValidationError,
                      ValidationInfo, field_validator, model_validator)

from partial_barrier.config.base import ClusterSpec
from partial_barrier.config.model import GammaPolicy, SolverConfig
from partial_barrier.io import DatasetFormatError, generate_synthetic, load_dataset_csv
from partial_barrier.schema.data import Dataset
from partial_barrier.types.enums import GammaMode

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class SyntheticData(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=1)
    m: int = Field(ge=1)
    seed: int = Field(default=0)
    noise_sd: float = Field(default=0.0, ge=0)


class DatasetSource(BaseModel):
    """Exactly one of `path` or `synthetic`."""

    model_config = ConfigDict(extra="forbid")

    path: Optional[Path] = Field(default=None)
    synthetic: Optional[SyntheticData] = Field(default=None)

    @field_validator("path")
    @classmethod
    def _path_exists(cls, v: Optional[Path], info: ValidationInfo) -> Optional[Path]:
        if v is None:
            return v
        base = (info.context or {}).get("base_dir")
        if base is not None and not v.is_absolute():
            v = Path(base) / v
        if not v.is_file():
            raise ValueError(f"dataset file {v} does not exist")
        return v

    @model_validator(mode="after")
    def _exactly_one(self) -> "DatasetSource":
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("dataset needs exactly one of 'path' or 'synthetic'")
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: DatasetSource
    cluster: ClusterSpec
    solver: SolverConfig = Field(default_factory=SolverConfig)
    gamma: GammaPolicy = Field(default_factory=GammaPolicy)
    seed: int = Field(default=0)
    output_dir: Path = Field(default=Path("out"))

    @model_validator(mode="after")
    def _synthetic_fits_cluster(self) -> "RunConfig":
        if self.dataset.synthetic is not None:
            self.cluster.check_examples(self.dataset.synthetic.m)
        return self

    @model_validator(mode="after")
    def _gamma_fits_cluster(self) -> "RunConfig":
        if self.gamma.mode == GammaMode.EXPLICIT and self.gamma.gamma > self.cluster.M:
            raise ValueError(f"gamma={self.gamma.gamma} exceeds the worker count M={self.cluster.M}")
        return self

    @property
    def solver_config(self) -> SolverConfig:
        """Solver block with the gamma block folded in."""
        return self.solver.model_copy(update={"gamma_policy": self.gamma})

    def load_dataset(self) -> Tuple[Dataset, Optional[np.ndarray]]:
        """The dataset, and the generating theta when it is synthetic."""
        theta_true = None
        if self.dataset.synthetic is not None:
            s = self.dataset.synthetic
            data, theta_true = generate_synthetic(s.n, s.m, s.seed, s.noise_sd)
        else:
            try:
                data = load_dataset_csv(self.dataset.path)
            except (DatasetFormatError, ValueError) as e:
                raise ConfigError(f"dataset {self.dataset.path}: {str(e)}") from e
        try:
            self.cluster.check_examples(data.m)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return data, theta_true


def load_run_config(
    path: Path, seed: Optional[int] = None, output_dir: Optional[Path] = None
) -> RunConfig:
    """Parse and validate a JSON run configuration; `seed` and `output_dir` override the file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {str(e)}") from e
    try:
        cfg = RunConfig.model_validate_json(text, context={"base_dir": path.parent})
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}:\n{str(e)}") from e

    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if output_dir is not None:
        overrides["output_dir"] = Path(output_dir)
    if overrides:
        cfg = cfg.model_copy(update=overrides)
    logger.info(f"Loaded config {path} (seed={cfg.seed}, output_dir={cfg.output_dir})")
    return cfg
