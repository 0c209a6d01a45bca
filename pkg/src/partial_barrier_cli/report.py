"""Rendering of summary.txt, the verify report and console status lines."""

import math
import os
from typing import List, Optional, Sequence

import numpy as np
from jinja2 import Environment, FileSystemLoader, select_autoescape
from pydantic import BaseModel, Field
from termcolor import colored

from partial_barrier.diagnostics import (VerificationReport, contraction_check,
                                         theta_norm_bound)
from partial_barrier.schema.data import DataBounds
from partial_barrier.schema.trace import IterationRecord
from partial_barrier.types.enums import CheckSeverity
from partial_barrier_cli.settings import settings

TEMPLATE_DIR = os.path.join(os.path.dirname(__file__), "templates")


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    return repr(float(value))


def _environment() -> Environment:
    env = Environment(
        loader=FileSystemLoader(TEMPLATE_DIR),
        autoescape=select_autoescape(["html", "xml"]),
        keep_trailing_newline=True,
    )
    env.filters["repr"] = _fmt
    return env


class RunStats(BaseModel):
    label: str
    gamma: int = Field(ge=1)
    iterations: int = Field(ge=0)
    final_objective: float
    final_grad_norm: float
    final_dist: Optional[float] = None
    sim_time: float = Field(ge=0)
    descent_positive: int = Field(ge=0)
    rounds: int = Field(ge=0)
    contraction_violations: int = Field(default=0, ge=0)
    theta_bound_violations: int = Field(default=0, ge=0)

    @classmethod
    def from_trace(
        cls,
        label: str,
        trace: Sequence[IterationRecord],
        theta_star: np.ndarray,
        eta: float,
        lam: float,
        bounds: DataBounds,
        l: int,  # noqa: E741
    ) -> "RunStats":
        last = trace[-1]
        products = [r.descent_product for r in trace[1:] if r.descent_product is not None]
        violations = 0
        if len(trace) >= 2:
            violations = len(contraction_check(trace, theta_star, eta, lam, bounds, l).violations)
        ceiling = theta_norm_bound(bounds, lam, l)
        return cls(
            label=label,
            gamma=last.gamma,
            iterations=last.t,
            final_objective=last.objective,
            final_grad_norm=last.grad_norm,
            final_dist=last.dist_to_opt,
            sim_time=last.sim_time,
            descent_positive=sum(1 for p in products if p > 0),
            rounds=len(products),
            contraction_violations=violations,
            theta_bound_violations=sum(
                1 for r in trace if float(np.linalg.norm(r.theta)) > ceiling
            ),
        )


def speedup(baseline: RunStats, partial: RunStats) -> float:
    """Baseline simulated time over partial-barrier simulated time."""
    if partial.sim_time == 0.0:
        return 1.0 if baseline.sim_time == 0.0 else math.inf
    return baseline.sim_time / partial.sim_time


class RunSummary(BaseModel):
    m: int
    n: int
    l: int  # noqa: E741
    M: int
    zeta: int
    lam: float
    eta: float
    tol: float
    t_max: int
    payload_mode: str
    seed: int
    runs: List[RunStats] = Field(default_factory=list)
    speedup: Optional[float] = None
    objective_gap: Optional[float] = None

    def add_baseline(self, partial: RunStats, baseline: RunStats) -> None:
        self.runs.append(baseline)
        self.speedup = speedup(baseline, partial)
        scale = abs(baseline.final_objective)
        diff = abs(partial.final_objective - baseline.final_objective)
        self.objective_gap = diff / scale if scale > 0 else diff


def render_summary(summary: RunSummary) -> str:
    template = _environment().get_template("summary.j2")
    return template.render(**summary.model_dump(exclude={"runs"}), runs=summary.runs)


def render_verify_report(report: VerificationReport, **context) -> str:
    hard = [r for r in report.results if r.severity == CheckSeverity.HARD]
    soft = [r for r in report.results if r.severity == CheckSeverity.SOFT]
    template = _environment().get_template("verify_report.j2")
    return template.render(
        results=report.results,
        hard_total=len(hard),
        hard_passed=sum(1 for r in hard if r.passed),
        soft_total=len(soft),
        soft_passed=sum(1 for r in soft if r.passed),
        first_failure=report.first_failure,
        passed=report.passed,
        **context,
    )


def status_line(text: str, ok: bool) -> str:
    if not settings.color:
        return text
    return colored(text, "green" if ok else "red")
