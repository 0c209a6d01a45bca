import argparse
import enum
import sys
from pathlib import Path
from typing import Callable, List, Optional

from pydantic import ValidationError
from termcolor import cprint

from partial_barrier.cluster.core import ShardingError, StarvationError
from partial_barrier.features import NumericalFailureError
from partial_barrier.monitor import monitor_sync, set_timezone
from partial_barrier.sampling import SamplingError
from partial_barrier.solver import GammaRangeError
from partial_barrier_cli import commands
from partial_barrier_cli.config import ConfigError, load_run_config
from partial_barrier_cli.log import configure_logging
from partial_barrier_cli.report import status_line
from partial_barrier_cli.settings import settings


class ExitCode(enum.IntEnum):
    OK = 0
    CHECK_FAILED = 1
    CONFIG_ERROR = 2
    STARVATION = 3
    NUMERICAL_FAILURE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partial-barrier",
        description="Partial-barrier distributed gradient descent on a simulated cluster.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--config", type=Path, required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--out", type=Path, default=None, help="overrides the output directory")
        return p

    gen = with_config(sub.add_parser("gen-data", help="write the synthetic dataset of a config"))
    gen.set_defaults(handler=_gen_data)

    run = with_config(sub.add_parser("run", help="run the configured experiment"))
    run.add_argument("--baseline", action="store_true", help="also run gamma = M")
    run.set_defaults(handler=_run)

    est = sub.add_parser("estimate-gamma", help="least number of worker responses per round")
    est.add_argument("N", type=int, help="population size (total examples)")
    est.add_argument("alpha", type=float, help="1 - confidence level")
    est.add_argument("xi", type=float, help="relative error")
    est.add_argument("zeta", type=int, help="examples per worker")
    est.add_argument("--variance", type=float, default=None, help="sample variance s^2")
    est.add_argument("--delta", type=float, default=None, help="absolute error (default xi * s)")
    est.set_defaults(handler=_estimate_gamma)

    ver = with_config(sub.add_parser("verify", help="run the numerical verification suite"))
    ver.set_defaults(handler=_verify)

    swp = with_config(sub.add_parser("sweep", help="final objective and time per gamma"))
    swp.add_argument("--gammas", type=int, nargs="+", default=None, help="default: 1..M")
    swp.set_defaults(handler=_sweep)
    return parser


def _monitored(func: Callable) -> Callable:
    return monitor_sync(func) if settings.monitor else func


def _gen_data(args: argparse.Namespace) -> ExitCode:
    cfg = load_run_config(args.config, output_dir=args.out)
    synthetic = cfg.dataset.synthetic
    if synthetic is None:
        raise ConfigError("gen-data needs a 'synthetic' dataset block")
    seed = synthetic.seed if args.seed is None else args.seed
    path = _monitored(commands.gen_data)(
        synthetic.n, synthetic.m, seed, synthetic.noise_sd, cfg.output_dir
    )
    print(path)
    return ExitCode.OK


def _run(args: argparse.Namespace) -> ExitCode:
    cfg = load_run_config(args.config, seed=args.seed, output_dir=args.out)
    summary = _monitored(commands.run_experiment)(cfg, baseline=args.baseline)
    print(f"final objective {summary.runs[0].final_objective!r} at t={summary.runs[0].iterations}")
    if summary.speedup is not None:
        print(f"speedup {summary.speedup!r}")
    return ExitCode.OK


def _estimate_gamma(args: argparse.Namespace) -> ExitCode:
    estimate = commands.cmd_estimate_gamma(
        args.N, args.alpha, args.xi, args.zeta, variance=args.variance, delta=args.delta
    )
    for line in estimate.lines():
        print(line)
    return ExitCode.OK


def _verify(args: argparse.Namespace) -> ExitCode:
    cfg = load_run_config(args.config, seed=args.seed, output_dir=args.out)
    report = _monitored(commands.cmd_verify)(cfg)
    failure = report.first_failure
    if failure is not None:
        print(status_line(f"FAILED: {failure.name}: {failure.detail}", ok=False))
        return ExitCode.CHECK_FAILED
    print(status_line("all hard checks passed", ok=True))
    return ExitCode.OK


def _sweep(args: argparse.Namespace) -> ExitCode:
    cfg = load_run_config(args.config, seed=args.seed, output_dir=args.out)
    print(_monitored(commands.sweep)(cfg, args.gammas))
    return ExitCode.OK


def _error(message: str) -> None:
    if settings.color:
        cprint(message, "red", file=sys.stderr)
    else:
        print(message, file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """Entrypoint of the application."""
    args = build_parser().parse_args(argv)
    configure_logging()
    set_timezone(settings.timezone)
    try:
        return int(args.handler(args))
    except (ConfigError, ShardingError, SamplingError, GammaRangeError, ValidationError) as e:
        _error(f"configuration error: {str(e)}")
        return int(ExitCode.CONFIG_ERROR)
    except StarvationError as e:
        _error(f"starvation: {str(e)}")
        return int(ExitCode.STARVATION)
    except NumericalFailureError as e:
        _error(f"numerical failure: {str(e)}")
        return int(ExitCode.NUMERICAL_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
