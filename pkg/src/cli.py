"""
Command-line front end: `python src/cli.py <command> [flags]`.

Exit codes: 0 success, 1 usage/config/IO error, 2 numerical non-convergence,
3 verification failure.
"""

import argparse
import sys
from typing import Any, Callable, Dict, List, Optional

from gap import run_gap
from logger import get_logger
from pricing.fixed_point import FixedPointDomainError
from run_config import RunConfig, load_run_config
from simulate import run_simulation
from solve import run_solve
from steady import run_steady
from verify import run_verification

logger = get_logger(task_name="cli")

EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFICATION_FAILED = 3

COMMANDS: Dict[str, Callable[[RunConfig], bool]] = {
    "solve": run_solve,
    "steady": run_steady,
    "gap": run_gap,
    "simulate": run_simulation,
    "verify": run_verification,
}

# exit code of a command that completes but reports failure
FAILURE_EXIT_CODES = {
    "solve": EXIT_NOT_CONVERGED,
    "steady": EXIT_NOT_CONVERGED,
    "gap": EXIT_NOT_CONVERGED,
    "simulate": EXIT_NOT_CONVERGED,
    "verify": EXIT_VERIFICATION_FAILED,
}

# command-line flag destination -> run config key
FLAG_KEYS = {
    "out": "output_dir",
    "horizon": "horizon",
    "seed": "seed",
    "replications": "replications",
    "tolerance": "tolerance",
    "max_iter": "max_iter",
    "alpha": "arrival_prob",
    "cost_max": "cost_max",
    "discount": "discount",
    "reset_age": "reset_age",
    "initial_age": "initial_age",
    "n_jobs": "n_jobs",
    "horizons": "gap_horizons",
    "delta_mode": "gap_delta_mode",
    "policy": "policy",
    "constant_price": "constant_price",
    "mode": "sim_mode",
}


def _horizon_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config; defaults to the bundled one")
    common.add_argument("--out", help="output directory")
    common.add_argument("--horizon", type=int, help="horizon T in slots")
    common.add_argument("--seed", type=int)
    common.add_argument("--replications", type=int)
    common.add_argument("--tolerance", type=float, help="fixed-point stopping threshold")
    common.add_argument("--max-iter", type=int, help="fixed-point round cap")
    common.add_argument("--alpha", type=float, help="arrival probability")
    common.add_argument("--cost-max", type=float, help="upper end b of the cost support")
    common.add_argument("--discount", type=float, help="discount factor rho")
    common.add_argument("--reset-age", type=float, help="age A0 after an update")
    common.add_argument("--initial-age", type=float, help="age A(0) at slot 0")
    common.add_argument("--n-jobs", type=int, help="joblib workers")

    parser = argparse.ArgumentParser(
        prog="pricing", description="Dynamic pricing for fresh information updates."
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("solve", parents=[common], help="finite-horizon trajectory")
    commands.add_parser("steady", parents=[common], help="infinite-horizon steady state")
    gap = commands.add_parser("gap", parents=[common], help="finite vs stationary cost gap")
    gap.add_argument("--horizons", type=_horizon_list, help="comma-separated horizons")
    gap.add_argument("--delta-mode", choices=["shared", "infinite"])
    simulate = commands.add_parser("simulate", parents=[common], help="Monte Carlo simulation")
    simulate.add_argument("--policy", choices=["finite_horizon", "steady_state", "constant", "oracle"])
    simulate.add_argument("--constant-price", type=float)
    simulate.add_argument("--mode", choices=["closed_loop", "open_loop", "both"])
    commands.add_parser("verify", parents=[common], help="numerical self-checks")
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        key: getattr(args, flag)
        for flag, key in FLAG_KEYS.items()
        if getattr(args, flag, None) is not None
    }


def exit_code_for(exc: BaseException) -> int:
    """Maps an exception (or the cause re-raised by a task script) to an exit code."""
    cause = exc.__cause__ if exc.__cause__ is not None else exc
    if isinstance(cause, FixedPointDomainError):
        return EXIT_NOT_CONVERGED
    return EXIT_CONFIG_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SUCCESS if exc.code == 0 else EXIT_CONFIG_ERROR

    try:
        config = load_run_config(args.config, collect_overrides(args))
    except (ValueError, TypeError, OSError) as exc:
        logger.error(f"Invalid run configuration: {exc}")
        return EXIT_CONFIG_ERROR

    try:
        succeeded = COMMANDS[args.command](config)
    except Exception as exc:
        return exit_code_for(exc)
    return EXIT_SUCCESS if succeeded else FAILURE_EXIT_CODES[args.command]


if __name__ == "__main__":
    sys.exit(main())
