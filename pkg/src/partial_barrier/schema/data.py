"""Dataset schema definitions."""

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Example(BaseModel):
    """One input vector with its scalar target."""

    model_config = ConfigDict(frozen=True)

    x: List[float] = Field(description="Input vector of length n", min_length=1)
    y: float = Field(description="Scalar target")

    @field_validator("x")
    @classmethod
    def _finite_inputs(cls, v: List[float]) -> List[float]:
        if not all(math.isfinite(c) for c in v):
            raise ValueError("example inputs must be finite")
        return v

    @field_validator("y")
    @classmethod
    def _finite_target(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("example target must be finite")
        return v


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Ordered examples stored as an (m, n) input matrix and a length-m target vector.

    Row order is stable; shard assignment depends on it.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, dtype=np.float64, copy=True).reshape(-1)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ValueError(f"dataset needs m >= 1 rows and n >= 1 columns, got {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("dataset contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_examples(cls, examples: Sequence[Example]) -> "Dataset":
        if not examples:
            raise ValueError("dataset needs at least one example")
        n = len(examples[0].x)
        for i, ex in enumerate(examples):
            if len(ex.x) != n:
                raise ValueError(f"example {i} has {len(ex.x)} inputs, expected {n}")
        return cls(
            X=np.array([ex.x for ex in examples], dtype=np.float64),
            y=np.array([ex.y for ex in examples], dtype=np.float64),
        )

    @property
    def m(self) -> int:
        return int(self.X.shape[0])

    @property
    def n(self) -> int:
        return int(self.X.shape[1])

    @property
    def examples(self) -> List[Example]:
        return [Example(x=row.tolist(), y=float(t)) for row, t in zip(self.X, self.y)]

    def take(self, indices: Iterable[int]) -> "Dataset":
        idx = np.fromiter(indices, dtype=np.int64)
        return Dataset(X=self.X[idx], y=self.y[idx])

    def block(self, start: int, stop: int) -> "Dataset":
        return Dataset(X=self.X[start:stop], y=self.y[start:stop])

    def __len__(self) -> int:
        return self.m


class DataBounds(BaseModel):
    """
    Attributes:
        k_max: Largest absolute feature entry over all examples.
        y_max: Largest absolute target.
        lip_hat: Largest squared feature-vector norm (data-term curvature bound).
    """

    model_config = ConfigDict(frozen=True)

    k_max: float = Field(ge=0)
    y_max: float = Field(ge=0)
    lip_hat: float = Field(ge=0)
