"""Sub-command implementations. Each returns its result; `__main__` maps errors to exit codes."""

import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import BaseModel, Field
from rx.subject import Subject

from partial_barrier.config.model import feature_dim
from partial_barrier.diagnostics import CHECK_HEADER, VerificationReport, VerificationSuite
from partial_barrier.features import compute_bounds, solve_closed_form
from partial_barrier.io import TraceWriter, generate_synthetic, write_dataset_csv
from partial_barrier.monitor import log_sync
from partial_barrier.sampling import (ConfidenceSpec, estimate_gamma,
                                      estimate_gamma_from_variance,
                                      inverse_normal_cdf, required_sample_size)
from partial_barrier.schema.data import Dataset
from partial_barrier.solver import resolve_eta, run
from partial_barrier_cli.config import ConfigError, RunConfig
from partial_barrier_cli.report import (RunStats, RunSummary, render_summary,
                                        render_verify_report)
from partial_barrier_cli.settings import settings

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.csv"
BASELINE_TRACE_FILE = "baseline_trace.csv"
SUMMARY_FILE = "summary.txt"
DATASET_FILE = "dataset.csv"
VERIFY_REPORT_FILE = "verify_report.txt"
VERIFY_CHECKS_FILE = "verify_checks.csv"
SWEEP_FILE = "sweep.csv"
SWEEP_HEADER = ("gamma", "abandon_rate", "final_objective", "sim_time", "iterations", "speedup")


class GammaEstimate(BaseModel):
    gamma: int = Field(ge=1)
    u_half_alpha: float
    sample_size: Optional[int] = None

    def lines(self) -> List[str]:
        out = [f"gamma = {self.gamma}", f"u_alpha/2 = {self.u_half_alpha:.6f}"]
        if self.sample_size is not None:
            out.append(f"sample size = {self.sample_size}")
        return out


@log_sync
def gen_data(
    n: int, m: int, seed: int, noise_sd: float, output_dir: Path
) -> Path:
    data, theta_true = generate_synthetic(n, m, seed, noise_sd)
    try:
        path = write_dataset_csv(data, Path(output_dir) / DATASET_FILE)
    except OSError as e:
        raise ConfigError(f"cannot write dataset to {output_dir}: {str(e)}") from e
    logger.info(f"Wrote {m} examples to {path} (theta_true norm {float((theta_true ** 2).sum()) ** 0.5:.6g})")
    return path


def _traced_run(
    data: Dataset,
    cfg: RunConfig,
    path: Path,
    gamma: Optional[int] = None,
    theta_star=None,
) -> list:
    subject = Subject()
    with TraceWriter(path).attach(subject):
        return run(
            data,
            cfg.cluster,
            cfg.solver_config,
            seed=cfg.seed,
            gamma=gamma,
            theta_star=theta_star,
            observer=subject,
            parallel_workers=settings.parallel_workers,
        )


def run_experiment(cfg: RunConfig, baseline: bool = False) -> RunSummary:
    """Run the configured partial barrier (and the gamma = M baseline) and write traces and summary."""
    data, _ = cfg.load_dataset()
    solver_cfg = cfg.solver_config
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    theta_star = solve_closed_form(data, solver_cfg.lam)
    bounds = compute_bounds(data)
    l = feature_dim(data.n)  # noqa: E741
    eta = resolve_eta(data, solver_cfg)

    def stats(label: str, trace: list) -> RunStats:
        return RunStats.from_trace(label, trace, theta_star, eta, solver_cfg.lam, bounds, l)

    trace = _traced_run(data, cfg, out / TRACE_FILE, theta_star=theta_star)
    summary = RunSummary(
        m=data.m,
        n=data.n,
        l=l,
        M=cfg.cluster.M,
        zeta=data.m // cfg.cluster.M,
        lam=solver_cfg.lam,
        eta=eta,
        tol=solver_cfg.tol,
        t_max=solver_cfg.t_max,
        payload_mode=solver_cfg.payload_mode.value,
        seed=cfg.seed,
    )
    partial = stats("partial barrier", trace)
    summary.runs.append(partial)

    if baseline:
        base_trace = _traced_run(
            data, cfg, out / BASELINE_TRACE_FILE, gamma=cfg.cluster.M, theta_star=theta_star
        )
        summary.add_baseline(partial, stats("full barrier baseline", base_trace))
        logger.info(f"Speedup over gamma=M: {summary.speedup:.4f}")

    (out / SUMMARY_FILE).write_text(render_summary(summary), encoding="utf-8")
    return summary


@log_sync
def cmd_estimate_gamma(
    N: int,
    alpha: float,
    xi: float,
    zeta: int,
    variance: Optional[float] = None,
    delta: Optional[float] = None,
) -> GammaEstimate:
    """Least worker count; with `variance` the explicit-variance sample size is used instead."""
    u = inverse_normal_cdf(1.0 - alpha / 2.0)
    if variance is None:
        return GammaEstimate(gamma=estimate_gamma(N, alpha, xi, zeta), u_half_alpha=u)
    if variance <= 0:
        raise ConfigError(f"variance must be > 0, got {variance}")
    if delta is None:
        delta = xi * math.sqrt(variance)
    if delta <= 0:
        raise ConfigError(f"delta must be > 0, got {delta}")
    spec = ConfidenceSpec(alpha=alpha, xi=xi, delta=delta)
    return GammaEstimate(
        gamma=estimate_gamma_from_variance(N, spec, variance, zeta),
        u_half_alpha=u,
        sample_size=required_sample_size(N, spec, variance),
    )


def cmd_verify(cfg: RunConfig) -> VerificationReport:
    data, _ = cfg.load_dataset()
    solver_cfg = cfg.solver_config
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    report = VerificationSuite(data, cfg.cluster, solver_cfg, seed=cfg.seed).run()

    with open(out / VERIFY_CHECKS_FILE, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CHECK_HEADER)
        for row in report.rows:
            writer.writerow(row.to_csv())
    text = render_verify_report(
        report,
        m=data.m,
        n=data.n,
        M=cfg.cluster.M,
        lam=solver_cfg.lam,
        eta=resolve_eta(data, solver_cfg),
        seed=cfg.seed,
    )
    (out / VERIFY_REPORT_FILE).write_text(text, encoding="utf-8")
    return report


def sweep(cfg: RunConfig, gammas: Optional[Sequence[int]] = None) -> Path:
    """Run once per gamma and tabulate accuracy and simulated time against the abandon rate."""
    data, _ = cfg.load_dataset()
    solver_cfg = cfg.solver_config
    M = cfg.cluster.M
    gammas = sorted(set(gammas)) if gammas else list(range(1, M + 1))
    if any(not 1 <= g <= M for g in gammas):
        raise ConfigError(f"sweep gammas must lie in [1, {M}], got {gammas}")

    def final(gamma: int):
        return run(
            data,
            cfg.cluster,
            solver_cfg,
            seed=cfg.seed,
            gamma=gamma,
            parallel_workers=settings.parallel_workers,
        )[-1]

    base = final(M)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / SWEEP_FILE
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for gamma in gammas:
            last = base if gamma == M else final(gamma)
            ratio = 1.0 if last.sim_time == 0.0 else base.sim_time / last.sim_time
            writer.writerow(
                [
                    gamma,
                    repr(1.0 - gamma / M),
                    repr(last.objective),
                    repr(last.sim_time),
                    last.t,
                    repr(ratio),
                ]
            )
            logger.info(f"gamma={gamma}: objective={last.objective:.6g} speedup={ratio:.4f}")
    return path

