import pandas as pd

from config import paths
from logger import get_logger, log_error
from pricing.fixed_point import delta_from_trajectory, solve_delta_finite
from pricing.riccati import (
    RiccatiTables,
    Trajectory,
    backward_recursion,
    discounted_cost,
    forward_trajectory,
)
from run_config import RunConfig, load_run_config
from utils import (
    ResourceTracker,
    format_float,
    save_dataframe_as_csv,
    save_text_lines,
)

logger = get_logger(task_name="solve")

TRAJECTORY_CSV_COLUMNS = [
    "t",
    "price",
    "expected_age",
    "Q_t",
    "M_t",
    "discounted_stage_cost",
]


def create_trajectory_dataframe(
    trajectory: Trajectory, tables: RiccatiTables
) -> pd.DataFrame:
    """
    Joins a priced trajectory with the coefficient tables it was built from.

    Args:
        trajectory (Trajectory): Slots 0..T of the expected-age path.
        tables (RiccatiTables): The matching Q_t and M_t.

    Returns:
        pd.DataFrame: One row per slot in the trajectory.csv column order.
    """
    frame = trajectory.to_dataframe()
    frame["Q_t"] = tables.q
    frame["M_t"] = tables.m
    return frame[TRAJECTORY_CSV_COLUMNS]


def run_solve(config: RunConfig) -> bool:
    """
    Estimates delta by fixed-point iteration, builds the finite-horizon
    tables and writes the priced expected-age trajectory and a summary.

    Args:
        config (RunConfig): The resolved run configuration.

    Returns:
        bool: Whether the fixed-point iteration converged. Outputs are written
            either way; a non-converged run is flagged in them.
    """
    try:
        with ResourceTracker(logger=logger, monitoring_interval=5):
            logger.info("Starting solve...")
            params = config.model_params()
            config.prepare_output_dir()

            logger.info("Running fixed-point estimation of delta...")
            estimate = solve_delta_finite(
                params,
                initial_delta=config.initial_delta,
                tolerance=config.tolerance,
                max_iter=config.max_iter,
            )
            if estimate.converged:
                logger.info(
                    f"delta={estimate.value:.6g} after {estimate.iterations} iterations"
                )
            else:
                logger.warning("delta did not converge; outputs are flagged as partial")

            logger.info("Building coefficient tables...")
            tables = backward_recursion(params, estimate.value)
            trajectory = forward_trajectory(params, tables, clip=config.clip_prices)
            total_cost = discounted_cost(trajectory, params)
            # the emitted path may use clipped prices, which the estimate did not follow
            emitted_delta = delta_from_trajectory(params, trajectory)
            if abs(emitted_delta - estimate.value) > config.tolerance:
                logger.warning(
                    f"The emitted trajectory implies delta={emitted_delta:.6g}, "
                    f"not the estimate {estimate.value:.6g}"
                )

            provenance = dict(config.provenance(), converged=estimate.converged)

            logger.info("Saving trajectory...")
            save_dataframe_as_csv(
                create_trajectory_dataframe(trajectory, tables),
                config.output_path(paths.TRAJECTORY_FILE_NAME),
                provenance=provenance,
            )

            logger.info("Saving summary...")
            save_text_lines(
                [
                    f"delta={format_float(estimate.value)}",
                    f"iterations={estimate.iterations}",
                    f"residual={format_float(estimate.residual)}",
                    f"converged={estimate.converged}",
                    f"emitted_trajectory_delta={format_float(emitted_delta)}",
                    f"discounted_cost={format_float(total_cost)}",
                ],
                config.output_path(paths.SUMMARY_FILE_NAME),
                provenance=provenance,
            )
        return estimate.converged

    except Exception as exc:
        err_msg = "Error occurred during solve."
        # Log the error
        logger.error(f"{err_msg} Error: {str(exc)}")
        # Log the error to the separate logging file
        log_error(message=err_msg, error=exc, error_fpath=paths.SOLVE_ERROR_FILE_PATH)
        # re-raise the error
        raise Exception(f"{err_msg} Error: {str(exc)}") from exc


if __name__ == "__main__":
    run_solve(load_run_config())
