"""
Fixed-point estimation of the age-reduction estimator delta over a finite
horizon: build the tables with delta, follow the resulting expected ages,
recompute delta as their discounted average reduction, repeat.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from logger import get_logger
from pricing.model import ModelParams
from pricing.riccati import Trajectory, backward_recursion, forward_trajectory

logger = get_logger(task_name="pricing.fixed_point")

DEFAULT_TOLERANCE = 1e-3
DEFAULT_MAX_ITER = 10_000

# slack for the upper edge of the domain check
DOMAIN_SLACK = 1e-9


class FixedPointDomainError(ArithmeticError):
    """Raised when an expected-age path leaves prod_t [0, A(0) + t]."""


@dataclass(frozen=True)
class DeltaEstimate:
    """
    Outcome of the fixed-point iteration.

    Attributes:
        value (float): The estimator delta.
        iterations (int): Rounds performed.
        residual (float): |delta(j) - delta(j-1)| of the last round.
        converged (bool): Whether the residual fell to the tolerance.
        history (List[float]): delta after every round.
    """

    value: float
    iterations: int
    residual: float
    converged: bool
    history: List[float] = field(default_factory=list)


def delta_from_trajectory(params: ModelParams, trajectory: Trajectory) -> float:
    """
    Discounted time-average age reduction over slots 0..T-1:

        delta = (1 - rho) / (1 - rho^T) * sum_{t<T} rho^t (A(t) - A0)

    The terminal age is excluded since it moves no earlier age.
    """
    horizon = trajectory.horizon
    if horizon < 1:
        raise ValueError("trajectory must cover at least two slots")
    rho = params.discount
    weights = rho ** np.arange(horizon)
    reductions = np.asarray(trajectory.expected_age[:horizon]) - params.reset_age
    return float((1.0 - rho) / (1.0 - rho**horizon) * np.dot(weights, reductions))


def check_domain(params: ModelParams, trajectory: Trajectory) -> None:
    """Asserts every age lies in [0, A(0) + t]."""
    ages = np.asarray(trajectory.expected_age)
    upper = params.initial_age + np.arange(len(ages)) + DOMAIN_SLACK
    outside = np.flatnonzero((ages < 0.0) | (ages > upper))
    if outside.size:
        t = int(outside[0])
        raise FixedPointDomainError(
            f"expected age {ages[t]} at slot {t} leaves [0, {params.initial_age + t}]"
        )


def solve_delta_finite(
    params: ModelParams,
    initial_delta: float = 0.0,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    clip: bool = False,
) -> DeltaEstimate:
    """
    Iterates delta -> delta_from_trajectory(forward_trajectory(tables(delta)))
    until two successive estimates differ by at most the tolerance.

    By default the iteration follows the unclipped prices, the relaxed
    problem whose closed-form ages the estimator is defined on.

    Args:
        params (ModelParams): Model parameters.
        initial_delta (float): Starting estimate, nonnegative. Defaults to 0.
        tolerance (float): Stopping threshold on |delta(j) - delta(j-1)|.
        max_iter (int): Round cap; reaching it returns converged=False.
        clip (bool): Iterate the clipped trajectory instead.

    Returns:
        DeltaEstimate: The last estimate and its convergence record.
    """
    if initial_delta < 0.0:
        raise ValueError(f"initial_delta must be nonnegative, got {initial_delta}")
    if not tolerance > 0.0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    if isinstance(max_iter, bool) or int(max_iter) != max_iter or max_iter < 1:
        raise ValueError(f"max_iter must be a positive integer, got {max_iter}")

    delta = float(initial_delta)
    residual = float("inf")
    history: List[float] = []
    for iteration in range(1, int(max_iter) + 1):
        tables = backward_recursion(params, delta)
        trajectory = forward_trajectory(params, tables, clip=clip)
        check_domain(params, trajectory)

        estimate = delta_from_trajectory(params, trajectory)
        if estimate < 0.0:
            logger.warning(f"Recomputed delta {estimate:.6g} is negative; using 0")
            estimate = 0.0
        residual = abs(estimate - delta)
        delta = estimate
        history.append(delta)
        if residual <= tolerance:
            return DeltaEstimate(
                value=delta,
                iterations=iteration,
                residual=residual,
                converged=True,
                history=history,
            )

    logger.warning(
        f"Fixed-point iteration stopped after {max_iter} rounds "
        f"with residual {residual:.6g}"
    )
    return DeltaEstimate(
        value=delta,
        iterations=int(max_iter),
        residual=residual,
        converged=False,
        history=history,
    )


def solve_delta_from_seeds(
    params: ModelParams,
    seeds: Sequence[float],
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    n_jobs: Optional[int] = 1,
) -> List[DeltaEstimate]:
    """
    Reruns the iteration from every seed. Distinct converged values point at
    multiple fixed points.
    """
    return Parallel(n_jobs=n_jobs)(
        delayed(solve_delta_finite)(
            params, initial_delta=seed, tolerance=tolerance, max_iter=max_iter
        )
        for seed in seeds
    )
