"""Trace schema definitions."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

TRACE_HEADER: Tuple[str, ...] = (
    "t",
    "sim_time",
    "objective",
    "grad_norm",
    "dist_to_opt",
    "gamma",
    "responder_ids",
    "round_duration",
)


@dataclass(frozen=True, eq=False)
class IterationRecord:
    """
    State of the master after update t (t = 0 is the initial point).

    Attributes:
        grad_norm: Norm of the full-data gradient, computed for diagnostics only.
        aggregate: Mean of the payloads the master consumed (None at t = 0).
        descent_product: Inner product of the full gradient at theta_{t-1} with
            `aggregate` (None at t = 0).
    """

    t: int
    sim_time: float
    theta: np.ndarray
    objective: float
    grad_norm: float
    gamma: int
    responders: Tuple[int, ...] = ()
    round_duration: float = 0.0
    dist_to_opt: Optional[float] = None
    aggregate: Optional[np.ndarray] = field(default=None, repr=False)
    descent_product: Optional[float] = None

    def to_row(self) -> "TraceRow":
        return TraceRow(
            t=self.t,
            sim_time=self.sim_time,
            objective=self.objective,
            grad_norm=self.grad_norm,
            dist_to_opt=self.dist_to_opt,
            gamma=self.gamma,
            responder_ids=list(self.responders),
            round_duration=self.round_duration,
        )


def _fmt(value: float) -> str:
    return repr(float(value))


class TraceRow(BaseModel):
    """One line of trace.csv."""

    model_config = ConfigDict(frozen=True)

    t: int = Field(ge=0)
    sim_time: float = Field(ge=0)
    objective: float
    grad_norm: float = Field(ge=0)
    dist_to_opt: Optional[float] = Field(default=None)
    gamma: int = Field(ge=1)
    responder_ids: List[int] = Field(default_factory=list)
    round_duration: float = Field(default=0.0, ge=0)

    def to_csv(self) -> List[str]:
        return [
            str(self.t),
            _fmt(self.sim_time),
            _fmt(self.objective),
            _fmt(self.grad_norm),
            "" if self.dist_to_opt is None else _fmt(self.dist_to_opt),
            str(self.gamma),
            ";".join(str(i) for i in self.responder_ids),
            _fmt(self.round_duration),
        ]

    @classmethod
    def from_csv(cls, row: Dict[str, str]) -> "TraceRow":
        ids = row["responder_ids"]
        return cls(
            t=int(row["t"]),
            sim_time=float(row["sim_time"]),
            objective=float(row["objective"]),
            grad_norm=float(row["grad_norm"]),
            dist_to_opt=float(row["dist_to_opt"]) if row["dist_to_opt"] else None,
            gamma=int(row["gamma"]),
            responder_ids=[int(i) for i in ids.split(";")] if ids else [],
            round_duration=float(row["round_duration"]),
        )
