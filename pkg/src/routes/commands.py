"""CLI subcommands: simulate, solve, metrics, trace-check.

Each handler returns a process exit code; `dispatch` maps library errors to
codes (2 configuration, 3 numeric/domain, 4 I/O).
"""
import argparse
import json
import logging
import sys
import typing
from pathlib import Path

from dotenv import dotenv_values
from pydantic import ValidationError

from src.models.errors import ConfigurationError, PnPError
from src.models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


# -------------------------------
# Flags and config files
# -------------------------------

def _literal_choices(annotation) -> list[str] | None:
    if typing.get_origin(annotation) is typing.Literal:
        return list(typing.get_args(annotation))
    for arg in typing.get_args(annotation):
        choices = _literal_choices(arg)
        if choices:
            return choices
    return None


def add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    """One flag per ExperimentConfig field; unset flags stay absent so that
    config-file values and model defaults apply."""
    parser.add_argument("--config", dest="config_file", type=Path, help="KEY=VALUE experiment file")
    for name, info in ExperimentConfig.model_fields.items():
        flags = [f"--{name.replace('_', '-')}"]
        if info.alias:
            flags.insert(0, f"--{info.alias.replace('_', '-')}")
        kwargs = {"dest": name, "default": argparse.SUPPRESS, "help": info.description}
        choices = _literal_choices(info.annotation)
        if info.annotation is bool:
            kwargs["action"] = argparse.BooleanOptionalAction
        elif choices:
            kwargs["choices"] = choices
        parser.add_argument(*flags, **kwargs)


def _normalize_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return "lam" if key == "lambda" else key


def read_config_file(path: Path) -> dict:
    if not Path(path).is_file():
        raise ConfigurationError(f"config file not found: {path}", module="cli")
    values = dotenv_values(path)
    return {_normalize_key(k): v for k, v in values.items() if v is not None and v != ""}


def experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file (if any) with command-line flags; flags win."""
    merged = read_config_file(args.config_file) if getattr(args, "config_file", None) else {}
    for name in ExperimentConfig.model_fields:
        if hasattr(args, name):
            merged[name] = getattr(args, name)
    return ExperimentConfig(**merged)


# -------------------------------
# Handlers
# -------------------------------

def run_experiment(config: ExperimentConfig) -> int:
    """Run the full pipeline and return its exit status."""
    from src.services.experiment import execute_experiment  # local import keeps CLI start-up light

    return guarded(lambda: execute_experiment(config))


def simulate_command(args) -> int:
    """Simulate a measurement and write it with the truth and ROIs."""
    from src.services.experiment import simulate_experiment

    outputs = simulate_experiment(experiment_config(args))
    print(json.dumps({k: str(v) for k, v in outputs.items()}, sort_keys=True))
    return EXIT_OK


def solve_command(args) -> int:
    """Simulate (or load) data, reconstruct and score."""
    from src.services.experiment import execute_experiment

    report = execute_experiment(experiment_config(args))
    print(json.dumps({k: str(v) for k, v in report.outputs.items()}, sort_keys=True))
    return EXIT_OK


def metrics_command(args) -> int:
    """Score an estimate against a truth, with optional ROI masks."""
    from src.services.experiment import score
    from src.services.raster_io import load_raster, load_roi, write_metrics_csv

    if not args.peak > 0 or not args.mae_scale > 0:
        raise ConfigurationError("peak and mae-scale must be positive", module="cli")
    truth = load_raster(args.truth).values
    estimate = load_raster(args.estimate).values
    regions = {}
    for path in args.roi or []:
        roi = load_roi(path)
        regions[roi.label] = roi
    rows = score(truth, estimate, args.peak, args.mae_scale, regions)
    write_metrics_csv(args.output, rows)
    print(str(args.output))
    return EXIT_OK


def trace_check_command(args) -> int:
    """Check monotonicity (and the descent-rate bound when applicable) of a trace CSV."""
    from src.models.solver_config import SolverConfig
    from src.services.diagnostics import monotonicity_check, rate_check
    from src.services.raster_io import read_trace_csv

    trace = read_trace_csv(args.trace)
    config = SolverConfig(tau=args.tau, lam=args.lam, lipschitz_bound=args.lipschitz_bound)
    monotone = monotonicity_check(trace, args.tol)
    rate = rate_check(trace, config, args.tol)
    print(json.dumps({"monotone": monotone, "rate": rate, "iterations": len(trace)}))
    return EXIT_OK if monotone and rate is not False else EXIT_NUMERIC


def register_commands(subparsers) -> None:
    simulate = subparsers.add_parser("simulate", help=simulate_command.__doc__)
    add_experiment_flags(simulate)
    simulate.set_defaults(handler=simulate_command)

    solve = subparsers.add_parser("solve", help=solve_command.__doc__)
    add_experiment_flags(solve)
    solve.set_defaults(handler=solve_command)

    metrics = subparsers.add_parser("metrics", help=metrics_command.__doc__)
    metrics.add_argument("--truth", type=Path, required=True)
    metrics.add_argument("--estimate", type=Path, required=True)
    metrics.add_argument("--roi", type=Path, action="append", help="ROI mask (repeatable; nonzero = inside)")
    metrics.add_argument("--peak", type=float, default=1.0)
    metrics.add_argument("--mae-scale", type=float, default=1.0)
    metrics.add_argument("--output", type=Path, default=Path("metrics.csv"))
    metrics.set_defaults(handler=metrics_command)

    trace_check = subparsers.add_parser("trace-check", help=trace_check_command.__doc__)
    trace_check.add_argument("--trace", type=Path, required=True)
    trace_check.add_argument("--tol", type=float, default=1e-10)
    trace_check.add_argument("--tau", type=float, default=1.0)
    trace_check.add_argument("--lambda", "--lam", dest="lam", type=float, default=0.0)
    trace_check.add_argument("--lipschitz-bound", type=float, default=None)
    trace_check.set_defaults(handler=trace_check_command)


# -------------------------------
# Error mapping
# -------------------------------

def exit_code_for(error: BaseException) -> int:
    if isinstance(error, PnPError):
        return error.exit_code
    if isinstance(error, ValidationError):
        return EXIT_CONFIG
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_NUMERIC


def guarded(action) -> int:
    """Run `action`, turning library errors into exit codes."""
    try:
        result = action()
    except (PnPError, ValidationError, OSError) as e:
        code = exit_code_for(e)
        logger.error(f"[cli] {e}", extra={"exit_code": code, "error": type(e).__name__})
        print(f"error: {e}", file=sys.stderr)
        return code
    return result if isinstance(result, int) else EXIT_OK


def dispatch(args: argparse.Namespace) -> int:
    return guarded(lambda: args.handler(args))
