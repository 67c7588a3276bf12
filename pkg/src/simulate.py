import math
from typing import Tuple

import pandas as pd

from config import paths
from logger import get_logger, log_error
from pricing.fixed_point import solve_delta_finite
from pricing.model import ModelParams
from pricing.oracle import solve_nonlinear_dp
from pricing.policies import AbstractPricingPolicy, get_pricing_policy, true_dynamics_cost
from pricing.riccati import backward_recursion
from pricing.simulator import (
    MIN_REPLICATIONS_FOR_Z,
    SimConfig,
    compare_to_analytic,
    run,
)
from pricing.steady_state import solve_delta_infinite
from run_config import RunConfig, load_run_config
from utils import ResourceTracker, save_dataframe_as_csv

logger = get_logger(task_name="simulate")

SIMULATION_SUMMARY_COLUMNS = [
    "mode",
    "policy",
    "replications",
    "mean_discounted_cost",
    "discounted_cost_se",
    "expected_age_cost",
    "max_abs_z",
]


def build_policy(config: RunConfig, params: ModelParams) -> Tuple[AbstractPricingPolicy, bool]:
    """
    Builds the configured pricing policy with clipped prices.

    Returns:
        Tuple[AbstractPricingPolicy, bool]: The policy and whether every
            iterative solve behind it converged.

    Raises:
        InfeasibleParametersError: For "steady_state" without a nonnegative delta.
        ValueError: For "oracle" with a horizon above the oracle's limit.
    """
    policy_class = get_pricing_policy(config.policy)
    if config.policy == "finite_horizon":
        estimate = solve_delta_finite(
            params,
            initial_delta=config.initial_delta,
            tolerance=config.tolerance,
            max_iter=config.max_iter,
        )
        return policy_class(params, backward_recursion(params, estimate.value)), estimate.converged
    if config.policy == "steady_state":
        return policy_class(params, solve_delta_infinite(params)), True
    if config.policy == "oracle":
        return policy_class(params, solve_nonlinear_dp(params, config.grid_spec(params))), True
    return policy_class(params, config.constant_price), True


def run_simulation(config: RunConfig) -> bool:
    """
    Simulates the configured policy in each configured mode and writes the
    per-slot moments and a cost summary.

    Returns:
        bool: Whether the solve behind the policy converged.
    """
    try:
        with ResourceTracker(logger=logger, monitoring_interval=5):
            logger.info("Starting simulation...")
            params = config.model_params()
            config.prepare_output_dir()

            logger.info(f"Building {config.policy} policy...")
            policy, converged = build_policy(config, params)
            if not converged:
                logger.warning("delta did not converge; outputs are flagged as partial")
            expected_age_cost = true_dynamics_cost(params, policy)

            frames, summaries = [], []
            for mode in config.sim_modes():
                logger.info(f"Simulating ({mode})...")
                report = run(
                    params,
                    SimConfig(
                        policy=policy,
                        replications=config.replications,
                        seed=config.seed,
                        mode=mode,
                        n_jobs=config.n_jobs,
                    ),
                )
                # the expected-age recursion is the mean of open-loop runs only
                max_abs_z = math.nan
                if mode == "open_loop" and report.replications >= MIN_REPLICATIONS_FOR_Z:
                    max_abs_z = compare_to_analytic(report, params, policy).max_abs_z
                frames.append(report.to_dataframe())
                summaries.append(
                    {
                        "mode": mode,
                        "policy": policy.name,
                        "replications": report.replications,
                        "mean_discounted_cost": report.mean_discounted_cost,
                        "discounted_cost_se": report.discounted_cost_se,
                        "expected_age_cost": expected_age_cost,
                        "max_abs_z": max_abs_z,
                    }
                )

            provenance = dict(config.provenance(), converged=converged)
            logger.info("Saving simulation results...")
            save_dataframe_as_csv(
                pd.concat(frames, ignore_index=True),
                config.output_path(paths.SIMULATION_FILE_NAME),
                provenance=provenance,
            )
            save_dataframe_as_csv(
                pd.DataFrame(summaries, columns=SIMULATION_SUMMARY_COLUMNS),
                config.output_path(paths.SIMULATION_SUMMARY_FILE_NAME),
                provenance=provenance,
            )
        return converged

    except Exception as exc:
        err_msg = "Error occurred during simulation."
        logger.error(f"{err_msg} Error: {str(exc)}")
        log_error(message=err_msg, error=exc, error_fpath=paths.SIMULATE_ERROR_FILE_PATH)
        raise Exception(f"{err_msg} Error: {str(exc)}") from exc


if __name__ == "__main__":
    run_simulation(load_run_config())
