from typing import List

import pandas as pd

from config import paths
from logger import get_logger, log_error
from pricing.steady_state import GapRow, epsilon_gap
from run_config import RunConfig, load_run_config
from utils import ResourceTracker, save_dataframe_as_csv

logger = get_logger(task_name="gap")

GAP_CSV_COLUMNS = ["T", "U", "U_inf", "gap", "delta", "converged", "t0", "tail_bound"]


def create_gap_dataframe(rows: List[GapRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "T": row.horizon,
                "U": row.finite_cost,
                "U_inf": row.steady_cost,
                "gap": row.gap,
                "delta": row.delta,
                "converged": row.converged,
                "t0": row.lag,
                "tail_bound": row.tail_bound,
            }
            for row in rows
        ],
        columns=GAP_CSV_COLUMNS,
    )


def run_gap(config: RunConfig) -> bool:
    """
    Sweeps the configured horizons and writes U(T), U_inf(T) and their gap.

    Returns:
        bool: Whether the fixed-point iteration converged for every horizon.
    """
    try:
        with ResourceTracker(logger=logger, monitoring_interval=5):
            logger.info("Starting gap sweep...")
            params = config.model_params()
            config.prepare_output_dir()

            logger.info(
                f"Comparing finite and stationary policies over T={config.gap_horizons} "
                f"({config.gap_delta_mode} delta)..."
            )
            rows = epsilon_gap(
                params,
                config.gap_horizons,
                tolerance=config.tolerance,
                max_iter=config.max_iter,
                initial_delta=config.initial_delta,
                delta_mode=config.gap_delta_mode,
                clip=config.clip_prices,
                n_jobs=config.n_jobs,
                progress=True,
            )
            converged = all(row.converged for row in rows)
            if not converged:
                logger.warning("delta did not converge for every horizon")

            logger.info("Saving gap table...")
            save_dataframe_as_csv(
                create_gap_dataframe(rows),
                config.output_path(paths.GAP_FILE_NAME),
                provenance=dict(config.provenance(), converged=converged),
            )
        return converged

    except Exception as exc:
        err_msg = "Error occurred during gap sweep."
        logger.error(f"{err_msg} Error: {str(exc)}")
        log_error(message=err_msg, error=exc, error_fpath=paths.GAP_ERROR_FILE_PATH)
        raise Exception(f"{err_msg} Error: {str(exc)}") from exc


if __name__ == "__main__":
    run_gap(load_run_config())
