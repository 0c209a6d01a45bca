import logging
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..types.enums import GammaMode, PayloadMode

logger = logging.getLogger(__name__)


def feature_dim(n: int) -> int:
    """Length of the quadratic feature vector for n inputs."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n * (n + 1) // 2 + n + 1


class ModelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    lam: float = Field(gt=0)
    n: int = Field(ge=1)

    @property
    def l(self) -> int:  # noqa: E743
        return feature_dim(self.n)


class GammaPolicy(BaseModel):
    """
    How many worker responses the master waits for.

    Note:
        explicit: uses `gamma`.
        algorithm1: uses `alpha` and `xi`.
        variance: uses `alpha`, `xi` and an explicit sample variance `variance`
            (Delta = xi * sqrt(variance)).
    """

    model_config = ConfigDict(extra="forbid")

    mode: GammaMode = Field(default=GammaMode.ALGORITHM1)
    gamma: Optional[int] = Field(default=None, ge=1)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    xi: float = Field(default=0.05, gt=0)
    variance: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _mode_inputs(self) -> "GammaPolicy":
        if self.mode == GammaMode.EXPLICIT and self.gamma is None:
            raise ValueError("gamma.mode 'explicit' requires gamma")
        if self.mode == GammaMode.VARIANCE and self.variance is None:
            raise ValueError("gamma.mode 'variance' requires variance")
        return self


class SolverConfig(BaseModel):
    """
    Attributes:
        lam: Regularization weight.
        eta: Constant step size. None selects `default_eta` from the data bounds.
        t_max: Maximum number of master updates.
        tol: Stop once the full gradient norm is at or below this value.
    """

    model_config = ConfigDict(extra="forbid")

    lam: float = Field(default=0.1, gt=0)
    eta: Optional[float] = Field(default=None, gt=0)
    t_max: int = Field(default=20000, ge=0)
    tol: float = Field(default=1e-8, gt=0)
    payload_mode: PayloadMode = Field(default=PayloadMode.GRADIENT)
    gamma_policy: GammaPolicy = Field(default_factory=GammaPolicy)

    @model_validator(mode="after")
    def _warn_unsafe_eta(self) -> "SolverConfig":
        if not self.eta_within_bound:
            logger.warning(
                f"eta={self.eta} exceeds 1/lam={1.0 / self.lam}; "
                "contraction guarantees do not apply"
            )
        return self

    @property
    def eta_within_bound(self) -> bool:
        return self.eta is None or self.eta <= 1.0 / self.lam
