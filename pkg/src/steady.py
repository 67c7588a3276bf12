import math

import pandas as pd

from config import paths
from logger import get_logger, log_error
from pricing.steady_state import (
    InfeasibleParametersError,
    SteadyState,
    build_steady_state,
    delta_equation,
    solve_delta_infinite,
)
from run_config import RunConfig, load_run_config
from utils import ResourceTracker, save_dataframe_as_csv

logger = get_logger(task_name="steady")

STEADY_CSV_COLUMNS = [
    "delta",
    "Q",
    "M",
    "limit_age",
    "limit_price",
    "condition1",
    "condition2",
    "feasible",
    "root_found",
    "root_residual",
]


def create_steady_dataframe(
    steady: SteadyState, root_found: bool, root_residual: float
) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "delta": steady.delta,
                "Q": steady.q,
                "M": steady.m,
                "limit_age": steady.limit_age,
                "limit_price": steady.limit_price,
                "condition1": steady.condition1,
                "condition2": steady.condition2,
                "feasible": steady.feasible,
                "root_found": root_found,
                "root_residual": root_residual,
            }
        ],
        columns=STEADY_CSV_COLUMNS,
    )


def run_steady(config: RunConfig) -> bool:
    """
    Solves the infinite-horizon delta equation and writes the steady
    coefficients, limits and feasibility flags.

    When no nonnegative root exists the row describes delta = 0 with
    root_found=False; infeasibility is reported in the file, not raised.

    Returns:
        bool: Always True; the command has no numerical failure mode.
    """
    try:
        with ResourceTracker(logger=logger, monitoring_interval=5):
            logger.info("Starting steady-state solve...")
            params = config.model_params()
            config.prepare_output_dir()

            logger.info("Solving the infinite-horizon delta equation...")
            try:
                steady = solve_delta_infinite(params)
                root_found = True
                root_residual = abs(delta_equation(params, steady.delta))
            except InfeasibleParametersError as exc:
                logger.warning(f"Infeasible parameters: {exc}")
                steady = build_steady_state(params, 0.0)
                root_found = False
                root_residual = math.nan

            logger.info("Saving steady state...")
            save_dataframe_as_csv(
                create_steady_dataframe(steady, root_found, root_residual),
                config.output_path(paths.STEADY_FILE_NAME),
                provenance=config.provenance(),
            )
        return True

    except Exception as exc:
        err_msg = "Error occurred during steady-state solve."
        logger.error(f"{err_msg} Error: {str(exc)}")
        log_error(message=err_msg, error=exc, error_fpath=paths.STEADY_ERROR_FILE_PATH)
        raise Exception(f"{err_msg} Error: {str(exc)}") from exc


if __name__ == "__main__":
    run_steady(load_run_config())
