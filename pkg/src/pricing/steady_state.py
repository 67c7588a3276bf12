"""
Infinite-horizon closed forms of the approximate pricing scheme.

As the horizon grows Q_t and M_t settle to steady values Q and M, the price
becomes a stationary linear rule in the age, and the expected age converges
to a limit. Matching that limit with A0 + delta pins down the estimator
without iterating.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import bisect
from tqdm import tqdm

from logger import get_logger
from pricing.fixed_point import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOLERANCE,
    solve_delta_finite,
)
from pricing.model import ArrayLike, ModelParams, check_age, clip_price
from pricing.riccati import (
    RiccatiTables,
    backward_recursion,
    discounted_cost,
    forward_trajectory,
    optimal_price,
    rollout,
)

logger = get_logger(task_name="pricing.steady_state")

DELTA_MODES = ("shared", "infinite")

# interval tolerance of the bisection on the infinite-horizon delta equation
ROOT_XTOL = 1e-12
MAX_BRACKET_DOUBLINGS = 200


class InfeasibleParametersError(ValueError):
    """Raised when no nonnegative delta solves the infinite-horizon equation."""


@dataclass(frozen=True)
class SteadyState:
    """
    Steady-state description of the approximate pricing at one delta.

    Attributes:
        delta (float): Estimator of the age reduction per update.
        q (float): Steady quadratic coefficient Q >= 1.
        m (float): Steady linear coefficient M >= 0.
        limit_age (float): Limit of the expected age under the stationary price.
        limit_price (float): Limit of the stationary price, clipped to [0, b].
        condition1 (bool): Delay condition guaranteeing delta >= 0.
        condition2 (bool): alpha >= 1 / (delta + 1), keeping the limit price <= b.
    """

    delta: float
    q: float
    m: float
    limit_age: float
    limit_price: float
    condition1: bool
    condition2: bool

    @property
    def feasible(self) -> bool:
        return self.condition1 and self.condition2


@dataclass(frozen=True)
class GapRow:
    """Finite-horizon cost against the stationary policy's cost for one T."""

    horizon: int
    finite_cost: float
    steady_cost: float
    gap: float
    delta: float
    converged: bool
    lag: int
    tail_bound: float


def steady_q(params: ModelParams, delta: float) -> float:
    """
    Positive root of rho k Q^2 + (1 - rho - rho k) Q - 1 = 0, the fixed point
    of the Q recursion. The root is evaluated in the form that avoids
    cancellation for either sign of the linear coefficient.
    """
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    rho = params.discount
    leading = rho * params.gain(delta)
    linear = 1.0 - rho - leading
    root = math.sqrt(linear**2 + 4.0 * leading)
    if linear >= 0.0:
        return 2.0 / (linear + root)
    return (root - linear) / (2.0 * leading)


def steady_m(params: ModelParams, delta: float, q: float) -> float:
    """M = 2 rho Q / (1 - rho + rho Q k), the fixed point of the M recursion."""
    rho = params.discount
    return 2.0 * rho * q / (1.0 - rho + rho * q * params.gain(delta))


def steady_price(
    params: ModelParams, ss: SteadyState, age: ArrayLike, clip: bool = True
) -> ArrayLike:
    """Stationary price rule with the steady coefficients, clipped to [0, b]."""
    check_age(age)
    price = optimal_price(params, ss.delta, ss.q, ss.m, age)
    return clip_price(params, price) if clip else price


def limit_age(params: ModelParams, delta: float, q: float, m: float) -> float:
    """
    Fixed point of the linearized age map under the stationary price,
    (2 - rho m k) / (2 rho q k). With m = steady_m(q) this equals

        (1 - rho)(1 + rho Q k) / (rho Q k (1 - rho + rho Q k)).

    Without arrivals the age never settles and the limit is infinite.
    """
    gain = params.gain(delta)
    if gain == 0.0:
        return math.inf
    rho = params.discount
    return (2.0 - rho * m * gain) / (2.0 * rho * q * gain)


def steady_expected_age(
    params: ModelParams, delta: float, q: float, m: float, t: ArrayLike
) -> ArrayLike:
    """
    Closed-form expected age at slot(s) t under the stationary price:

        A(t) = r^t A(0) + g (1 - r^t) / (1 - r)

    with r = 1 / (1 + rho Q k) and g = (2 - rho M k) / (2 + 2 rho Q k).
    """
    rho = params.discount
    gain = params.gain(delta)
    ratio = 1.0 / (1.0 + rho * q * gain)
    offset = (2.0 - rho * m * gain) / (2.0 + 2.0 * rho * q * gain)
    decay = ratio ** np.asarray(t, dtype=float)
    if ratio == 1.0:
        ages = params.initial_age + offset * np.asarray(t, dtype=float)
    else:
        ages = decay * params.initial_age + offset * (1.0 - decay) / (1.0 - ratio)
    return float(ages) if np.ndim(ages) == 0 else ages


def delta_equation(params: ModelParams, delta: float) -> float:
    """Left side of the infinite-horizon delta equation: limit age - A0 - delta."""
    q = steady_q(params, delta)
    m = steady_m(params, delta, q)
    return limit_age(params, delta, q, m) - params.reset_age - delta


def check_feasibility(params: ModelParams, delta: float) -> Tuple[bool, bool]:
    """
    The two sufficient conditions for delta >= 0 and a limit price within [0, b]:

        2b(1-rho) / (alpha rho (1 - x + sqrt((1 - x)^2 + 4b/(rho alpha)))) >= A0,
        with x = b(1-rho)/(rho alpha), and alpha >= 1 / (delta + 1).
    """
    alpha = params.arrival_prob
    b = params.cost_max
    rho = params.discount
    condition2 = alpha >= 1.0 / (delta + 1.0)
    if alpha == 0.0:
        return True, condition2
    ratio = b * (1.0 - rho) / (rho * alpha)
    threshold = (
        2.0
        * b
        * (1.0 - rho)
        / (alpha * rho * (1.0 - ratio + math.sqrt((1.0 - ratio) ** 2 + 4.0 * b / (rho * alpha))))
    )
    return threshold >= params.reset_age, condition2


def build_steady_state(params: ModelParams, delta: float) -> SteadyState:
    """Populates the steady coefficients, limits and feasibility at delta."""
    q = steady_q(params, delta)
    m = steady_m(params, delta, q)
    if params.arrival_prob == 0.0:
        raw_limit_price = math.inf
    else:
        raw_limit_price = params.cost_max / (params.arrival_prob * (delta + 1.0))
    condition1, condition2 = check_feasibility(params, delta)
    return SteadyState(
        delta=float(delta),
        q=q,
        m=m,
        limit_age=limit_age(params, delta, q, m),
        limit_price=float(clip_price(params, raw_limit_price)),
        condition1=condition1,
        condition2=condition2,
    )


def solve_delta_infinite(params: ModelParams, xtol: float = ROOT_XTOL) -> SteadyState:
    """
    Solves limit_age(delta) - A0 - delta = 0 for delta >= 0 by bisection.

    The left side decreases in delta, so a root exists iff it is nonnegative
    at delta = 0.

    Raises:
        InfeasibleParametersError: If no nonnegative root exists.
    """
    if params.arrival_prob == 0.0:
        raise InfeasibleParametersError(
            "arrival_prob is 0: the expected age has no finite limit"
        )
    at_zero = delta_equation(params, 0.0)
    if at_zero < 0.0:
        raise InfeasibleParametersError(
            f"no nonnegative delta: limit age at delta=0 is {at_zero + params.reset_age:.6g}"
            f" < reset_age={params.reset_age}"
        )
    if at_zero == 0.0:
        delta = 0.0
    else:
        q0 = steady_q(params, 0.0)
        upper = max(params.initial_age, 10.0 * limit_age(params, 0.0, q0, steady_m(params, 0.0, q0)))
        for _ in range(MAX_BRACKET_DOUBLINGS):
            if delta_equation(params, upper) < 0.0:
                break
            upper *= 2.0
        delta = bisect(lambda d: delta_equation(params, d), 0.0, upper, xtol=xtol, maxiter=1000)

    steady = build_steady_state(params, delta)
    if not steady.feasible:
        logger.warning(
            f"Feasibility conditions fail at delta={delta:.6g}: "
            f"condition1={steady.condition1}, condition2={steady.condition2}; "
            "prices will be clipped to [0, b]"
        )
    return steady


def convergence_lag(
    tables: RiccatiTables, q: float, m: float, tolerance: float = 1e-9
) -> int:
    """
    Smallest t0 with |Q_t - Q| <= tolerance and |M_t - M| <= tolerance for
    every t <= T - t0.
    """
    deviation = np.maximum(np.abs(tables.q - q), np.abs(tables.m - m))
    above = np.flatnonzero(deviation > tolerance)
    if above.size == 0:
        return 0
    return tables.horizon - int(above[0]) + 1


def _gap_row(
    params: ModelParams,
    tolerance: float,
    max_iter: int,
    initial_delta: float,
    clip: bool,
    infinite_steady: Optional[SteadyState],
    lag_tolerance: float,
) -> GapRow:
    estimate = solve_delta_finite(
        params, initial_delta=initial_delta, tolerance=tolerance, max_iter=max_iter
    )
    tables = backward_recursion(params, estimate.value)
    finite = forward_trajectory(params, tables, clip=clip)
    finite_cost = discounted_cost(finite, params)

    shared_steady = build_steady_state(params, estimate.value)
    steady = shared_steady if infinite_steady is None else infinite_steady

    def steady_rule(t: int, age: float) -> float:
        return steady_price(params, steady, age, clip=False)

    stationary = rollout(params, steady_rule, steady.delta, clip=clip)
    steady_cost = discounted_cost(stationary, params)

    horizon = params.horizon
    rho = params.discount
    lag = convergence_lag(tables, shared_steady.q, shared_steady.m, lag_tolerance)
    if lag == 0:
        tail_bound = 0.0
    else:
        worst = float(np.max(finite.stage_cost[horizon - lag + 1 :]))
        tail_bound = worst * rho ** (horizon - lag + 1) * (1.0 - rho**lag) / (1.0 - rho)

    return GapRow(
        horizon=horizon,
        finite_cost=finite_cost,
        steady_cost=steady_cost,
        gap=steady_cost - finite_cost,
        delta=estimate.value,
        converged=estimate.converged,
        lag=lag,
        tail_bound=tail_bound,
    )


def epsilon_gap(
    params: ModelParams,
    horizon_list: Sequence[int],
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    initial_delta: float = 0.0,
    delta_mode: str = "shared",
    clip: bool = True,
    lag_tolerance: float = 1e-9,
    n_jobs: Optional[int] = 1,
    progress: bool = False,
) -> List[GapRow]:
    """
    Discounted cost of the finite-horizon policy, U(T), against that of the
    stationary policy over the same horizon, U_inf(T), for every T.

    In "shared" mode the stationary policy uses the steady coefficients at the
    finite horizon's own delta and both policies move the same dynamics. In
    "infinite" mode it uses the infinite-horizon delta and its own dynamics.

    Raises:
        InfeasibleParametersError: In "infinite" mode, if that delta does not exist.
    """
    if delta_mode not in DELTA_MODES:
        raise ValueError(f"delta_mode must be one of {DELTA_MODES}, got {delta_mode}")
    for horizon in horizon_list:
        if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 1:
            raise ValueError(f"every horizon must be an integer >= 1, got {horizon}")

    infinite_steady = solve_delta_infinite(params) if delta_mode == "infinite" else None
    return Parallel(n_jobs=n_jobs)(
        delayed(_gap_row)(
            params.with_horizon(int(horizon)),
            tolerance,
            max_iter,
            initial_delta,
            clip,
            infinite_steady,
            lag_tolerance,
        )
        for horizon in tqdm(horizon_list, desc="Horizon sweep", disable=not progress)
    )
