import math
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from config import paths
from logger import get_logger, log_error
from pricing.fixed_point import check_domain, delta_from_trajectory, solve_delta_finite
from pricing.model import ModelParams, linearized_age_update
from pricing.oracle import solve_linearized_dp, solve_nonlinear_dp
from pricing.policies import FiniteHorizonPolicy, true_dynamics_cost
from pricing.riccati import (
    RiccatiTables,
    backward_recursion,
    forward_trajectory,
    price_at,
    recursion_residuals,
)
from pricing.simulator import SimConfig, compare_to_analytic, run
from pricing.steady_state import (
    InfeasibleParametersError,
    SteadyState,
    build_steady_state,
    delta_equation,
    epsilon_gap,
    solve_delta_infinite,
    steady_price,
)
from run_config import RunConfig, load_run_config
from utils import ResourceTracker, save_dataframe_as_csv

logger = get_logger(task_name="verify")

TableBuilder = Callable[[ModelParams, float], RiccatiTables]

RECURSION_TOLERANCE = 1e-12
BELLMAN_TOLERANCE = 2e-3
STEADY_CONVERGENCE_HORIZON = 500
STEADY_CONVERGENCE_TOLERANCE = 1e-6
FIXED_POINT_EQUATION_TOLERANCE = 1e-9
LIMIT_AGE_SLOTS = 1000
LIMIT_AGE_TOLERANCE = 1e-8
LIMIT_PRICE_TOLERANCE = 1e-9
ROOT_RESIDUAL_TOLERANCE = 1e-10
ROOT_SCAN_POINTS = 10_000
ROOT_SCAN_MAX = 1000.0
GAP_TOLERANCE = 1e-9
POOLED_Z_LIMIT = 3.0
SLOT_Z_LIMIT = 4.0


@dataclass(frozen=True)
class VerificationCheck:
    check: str
    measured: float
    tolerance: float
    passed: bool


def _check(name: str, measured: float, tolerance: float, passed: Optional[bool] = None) -> VerificationCheck:
    if passed is None:
        passed = bool(measured <= tolerance)
    level = "PASS" if passed else "FAIL"
    logger.info(f"[{level}] {name}: measured={measured:.6g} tolerance={tolerance:.6g}")
    return VerificationCheck(check=name, measured=float(measured), tolerance=float(tolerance), passed=bool(passed))


def check_recursion(params: ModelParams, tables: RiccatiTables) -> List[VerificationCheck]:
    q_residual, m_residual = recursion_residuals(params, tables)
    terminal = max(
        abs(tables.q[-1] - 1.0),
        abs(tables.m[-1]),
        abs(price_at(params, tables, tables.horizon, params.initial_age)),
    )
    return [
        _check("q_recursion_residual", q_residual, RECURSION_TOLERANCE),
        _check("m_recursion_residual", m_residual, RECURSION_TOLERANCE),
        _check("terminal_conditions", terminal, 0.0),
    ]


def check_bellman_consistency(
    config: RunConfig, build_tables: TableBuilder
) -> List[VerificationCheck]:
    """Closed-form prices against the greedy prices of the linearized grid DP."""
    params = config.model_params(horizon=config.oracle_horizon)
    estimate = solve_delta_finite(
        params, initial_delta=config.initial_delta, tolerance=config.tolerance, max_iter=config.max_iter
    )
    tables = build_tables(params, estimate.value)

    # unclipped linearized paths can fall below A0, so the grid starts at age 0
    grid = config.grid_spec(params, age_min=0.0)
    ages = grid.ages()
    closed_form = np.array(
        [price_at(params, tables, t, ages, clip=False) for t in range(params.horizon)]
    )
    # the price grid has to hold every unconstrained minimiser
    price_max = (math.ceil(float(np.max(closed_form)) / config.price_step) + 2) * config.price_step
    grid = config.grid_spec(params, age_min=0.0, price_max=max(price_max, params.cost_max))
    table = solve_linearized_dp(params, estimate.value, grid)

    successors = linearized_age_update(params, ages[None, :], closed_form, estimate.value)
    inside = (successors >= ages[0] + grid.age_step) & (successors <= ages[-1] - grid.age_step)
    deviation = np.abs(table.prices[: params.horizon] - closed_form)[inside]
    return [_check("bellman_consistency", float(deviation.max(initial=0.0)), BELLMAN_TOLERANCE)]


def check_nonlinear_oracle(config: RunConfig, build_tables: TableBuilder) -> List[VerificationCheck]:
    """The grid optimum of the true problem is no worse than the approximate policy."""
    params = config.model_params(horizon=config.oracle_horizon)
    estimate = solve_delta_finite(
        params, initial_delta=config.initial_delta, tolerance=config.tolerance, max_iter=config.max_iter
    )
    policy = FiniteHorizonPolicy(params, build_tables(params, estimate.value))
    approximate_cost = true_dynamics_cost(params, policy)
    table = solve_nonlinear_dp(params, config.grid_spec(params))
    oracle_cost = table.value_at(0, params.initial_age)
    logger.info(
        f"Linearization loss on the true problem: {approximate_cost - oracle_cost:.6g} "
        f"(oracle {oracle_cost:.6g}, approximate {approximate_cost:.6g})"
    )
    return [
        _check("nonlinear_oracle_sanity", oracle_cost - approximate_cost, 10.0 * config.age_step)
    ]


def check_steady_state(
    params: ModelParams, steady: SteadyState, build_tables: TableBuilder
) -> List[VerificationCheck]:
    rho = params.discount
    gain = params.gain(steady.delta)
    long_tables = build_tables(params.with_horizon(STEADY_CONVERGENCE_HORIZON), steady.delta)
    convergence = max(abs(long_tables.q[0] - steady.q), abs(long_tables.m[0] - steady.m))
    denominator = 1.0 + rho * steady.q * gain
    equations = max(
        abs(steady.q - 1.0 - rho * steady.q / denominator),
        abs(steady.m - rho * (steady.m + 2.0 * steady.q) / denominator),
    )

    age = params.initial_age
    for _ in range(LIMIT_AGE_SLOTS):
        age = linearized_age_update(params, age, steady_price(params, steady, age, clip=False), steady.delta)
    limit_price = params.cost_max / (params.arrival_prob * (steady.delta + 1.0))
    price_at_limit = steady_price(params, steady, steady.limit_age, clip=False)
    return [
        _check("steady_convergence", convergence, STEADY_CONVERGENCE_TOLERANCE),
        _check("steady_fixed_point_equations", equations, FIXED_POINT_EQUATION_TOLERANCE),
        _check("limit_age", abs(age - steady.limit_age), LIMIT_AGE_TOLERANCE),
        _check("limit_price", abs(price_at_limit - limit_price), LIMIT_PRICE_TOLERANCE),
    ]


def check_fixed_point(config: RunConfig, params: ModelParams) -> List[VerificationCheck]:
    estimate = solve_delta_finite(
        params, initial_delta=config.initial_delta, tolerance=config.tolerance, max_iter=config.max_iter
    )
    trajectory = forward_trajectory(params, backward_recursion(params, estimate.value), clip=False)
    recomputed = delta_from_trajectory(params, trajectory)
    try:
        check_domain(params, trajectory)
        outside = 0.0
    except ArithmeticError:
        outside = 1.0
    return [
        _check("fixed_point_converged", estimate.residual, config.tolerance, passed=estimate.converged),
        _check("fixed_point_consistency", abs(estimate.value - max(recomputed, 0.0)), config.tolerance),
        _check("trajectory_domain", outside, 0.0),
    ]


def check_infinite_root(params: ModelParams, steady: SteadyState) -> List[VerificationCheck]:
    scan = np.linspace(0.0, ROOT_SCAN_MAX, ROOT_SCAN_POINTS)
    values = np.array([delta_equation(params, delta) for delta in scan])
    sign_changes = int(np.count_nonzero(np.diff(np.sign(values)) != 0))
    return [
        _check("infinite_root_residual", abs(delta_equation(params, steady.delta)), ROOT_RESIDUAL_TOLERANCE),
        _check("infinite_root_unique", sign_changes, 1.0, passed=sign_changes == 1),
    ]


def check_gap_ordering(config: RunConfig, params: ModelParams) -> List[VerificationCheck]:
    horizons = sorted(set(int(horizon) for horizon in config.gap_horizons))
    rows = epsilon_gap(
        params,
        horizons,
        tolerance=config.tolerance,
        max_iter=config.max_iter,
        initial_delta=config.initial_delta,
        delta_mode="shared",
        clip=config.clip_prices,
        n_jobs=config.n_jobs,
    )
    gaps = np.array([row.gap for row in rows])
    checks = [_check("gap_nonnegative", float(-gaps.min()), GAP_TOLERANCE)]
    if len(rows) > 1:
        checks.append(_check("gap_decreasing", float(gaps[-1] - gaps[0]), 0.0))
    return checks


def check_monte_carlo(config: RunConfig, params: ModelParams) -> List[VerificationCheck]:
    """Open-loop simulation of the finite-horizon policy against the expected-age recursion."""
    estimate = solve_delta_finite(
        params, initial_delta=config.initial_delta, tolerance=config.tolerance, max_iter=config.max_iter
    )
    policy = FiniteHorizonPolicy(params, backward_recursion(params, estimate.value))
    report = run(
        params,
        SimConfig(
            policy=policy,
            replications=config.verify_replications,
            seed=config.seed,
            mode="open_loop",
            n_jobs=config.n_jobs,
        ),
    )
    summary = compare_to_analytic(report, params, policy)
    expected = summary.analytic_acceptance_path
    pooled_se = math.sqrt(float(np.sum(expected * (1.0 - expected))) / report.replications)
    pooled_gap = abs(float(np.sum(report.acceptance_rate_path - expected)))
    pooled_z = 0.0 if pooled_se == 0.0 else pooled_gap / pooled_se
    return [
        _check("mc_pooled_acceptance_z", pooled_z, POOLED_Z_LIMIT),
        _check("mc_max_acceptance_z", summary.max_abs_acceptance_z, SLOT_Z_LIMIT, passed=summary.max_abs_acceptance_z < SLOT_Z_LIMIT),
        _check("mc_max_age_z", summary.max_abs_z, SLOT_Z_LIMIT, passed=summary.max_abs_z < SLOT_Z_LIMIT),
    ]


def run_verification(
    config: RunConfig, build_tables: TableBuilder = backward_recursion
) -> bool:
    """
    Runs every numerical self-check and writes verification.csv.

    Args:
        config (RunConfig): The resolved run configuration.
        build_tables (Callable): Builds the coefficient tables under test;
            replacing it with a faulty builder must make the run fail.

    Returns:
        bool: True iff every check passed.
    """
    try:
        with ResourceTracker(logger=logger, monitoring_interval=5):
            logger.info("Starting verification...")
            params = config.model_params()
            config.prepare_output_dir()
            checks: List[VerificationCheck] = []

            logger.info("Checking fixed-point estimation...")
            checks += check_fixed_point(config, params)
            estimate = solve_delta_finite(
                params, initial_delta=config.initial_delta, tolerance=config.tolerance, max_iter=config.max_iter
            )

            logger.info("Checking coefficient recursion...")
            checks += check_recursion(params, build_tables(params, estimate.value))

            logger.info("Checking closed form against the linearized oracle...")
            checks += check_bellman_consistency(config, build_tables)

            logger.info("Checking approximate policy against the nonlinear oracle...")
            checks += check_nonlinear_oracle(config, build_tables)

            logger.info("Solving the infinite-horizon delta equation...")
            try:
                infinite = solve_delta_infinite(params)
            except InfeasibleParametersError as exc:
                logger.warning(f"Infeasible parameters, root checks skipped: {exc}")
                infinite = None
            if infinite is not None:
                checks += check_infinite_root(params, infinite)

            steady = infinite if infinite is not None else build_steady_state(params, estimate.value)
            if params.arrival_prob > 0.0:
                logger.info("Checking steady-state limits...")
                checks += check_steady_state(params, steady, build_tables)
            else:
                logger.warning("No arrivals: the expected age has no limit, limit checks skipped")
            if not steady.feasible:
                logger.warning(
                    f"Feasibility conditions fail: condition1={steady.condition1}, "
                    f"condition2={steady.condition2}"
                )

            logger.info("Checking the finite/stationary cost gap...")
            checks += check_gap_ordering(config, params)

            logger.info("Checking the simulator against the expected-age recursion...")
            checks += check_monte_carlo(config, params)

            logger.info("Saving verification report...")
            save_dataframe_as_csv(
                pd.DataFrame([asdict(check) for check in checks]),
                config.output_path(paths.VERIFICATION_FILE_NAME),
                provenance=config.provenance(),
            )

        failed = [check.check for check in checks if not check.passed]
        if failed:
            logger.error(f"Verification failed: {failed}")
        else:
            logger.info(f"All {len(checks)} checks passed")
        return not failed

    except Exception as exc:
        err_msg = "Error occurred during verification."
        logger.error(f"{err_msg} Error: {str(exc)}")
        log_error(message=err_msg, error=exc, error_fpath=paths.VERIFY_ERROR_FILE_PATH)
        raise Exception(f"{err_msg} Error: {str(exc)}") from exc


if __name__ == "__main__":
    run_verification(load_run_config())
