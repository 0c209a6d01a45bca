from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..types.enums import FailureMode


class LatencyModel(BaseModel):
    """
    Per-round timing of a worker, in simulated seconds.

    Attributes:
        base_per_example: Compute cost of one example.
        jitter_log_mu: Mean of the log of the per-round multiplier.
        jitter_log_sigma: Std of the log of the per-round multiplier. 0 disables jitter.
        straggle_prob: Probability that a round is slowed by straggle_factor.
        fail_prob: Probability that a worker never answers in a round.
        rtt: One-way message latency.
        fixed_speeds: Optional persistent per-worker multipliers (one per worker).
    """

    model_config = ConfigDict(extra="forbid")

    base_per_example: float = Field(default=0.01, ge=0)
    jitter_log_mu: float = Field(default=0.0)
    jitter_log_sigma: float = Field(default=0.25, ge=0)
    straggle_prob: float = Field(default=0.0, ge=0, le=1)
    straggle_factor: float = Field(default=1.0, ge=1)
    fail_prob: float = Field(default=0.0, ge=0, le=1)
    rtt: float = Field(default=0.0, ge=0)
    failure_mode: FailureMode = Field(default=FailureMode.TRANSIENT)
    fixed_speeds: Optional[List[float]] = Field(default=None)

    @field_validator("fixed_speeds")
    @classmethod
    def _speeds_positive(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(s <= 0 for s in v):
            raise ValueError("fixed_speeds must all be positive")
        return v


class ClusterSpec(BaseModel):
    """M workers holding zeta examples each."""

    model_config = ConfigDict(extra="forbid")

    M: int = Field(gt=0)
    zeta: Optional[int] = Field(default=None, gt=0)
    latency: LatencyModel = Field(default_factory=LatencyModel)

    @model_validator(mode="after")
    def _speeds_match_workers(self) -> "ClusterSpec":
        speeds = self.latency.fixed_speeds
        if speeds is not None and len(speeds) != self.M:
            raise ValueError(
                f"latency.fixed_speeds has {len(speeds)} entries for M={self.M} workers"
            )
        return self

    def check_examples(self, m: int) -> int:
        """Return zeta for a dataset of m examples, enforcing M * zeta = m."""
        if m % self.M != 0:
            raise ValueError(f"m={m} examples cannot be split evenly over M={self.M}")
        zeta = m // self.M
        if self.zeta is not None and self.zeta != zeta:
            raise ValueError(
                f"cluster.zeta={self.zeta} but m/M = {m}/{self.M} = {zeta}"
            )
        return zeta
