"""
Brute-force grid solvers used to check the closed forms.

The expected age is discretised on a uniform grid and the price on another
one; backward induction takes, at every slot and grid age, the cheapest grid
price of A^2 + (alpha / b) p^2 + rho V(A', t+1), with V(., t+1) interpolated
between grid ages. The cost is O(T * ages * prices), so the horizon is capped.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from logger import get_logger
from pricing.model import (
    ArrayLike,
    ModelParams,
    linearized_age_update,
    scalar_or_array,
    true_age_update,
)

logger = get_logger(task_name="pricing.oracle")

MAX_ORACLE_HORIZON = 20
INTERPOLATIONS = ("cubic", "linear")

# grid ages evaluated together in one block of the price scan
AGE_BLOCK_SIZE = 128
# slack for comparing grid ends with required ages
COVERAGE_SLACK = 1e-9

Transition = Callable[[np.ndarray, np.ndarray], np.ndarray]


class GridError(ValueError):
    """Raised when the age grid does not cover the ages a rollout reaches."""


@dataclass(frozen=True)
class GridSpec:
    """
    Age and price grids of the oracle.

    Attributes:
        price_step (float): Price resolution.
        age_min (float): Lowest grid age.
        age_max (float): Highest grid age.
        age_step (float): Age resolution; the grid has round(range / step) + 1 points.
        price_max (float, optional): Top of the price grid; defaults to b.
        interpolation (str): "cubic" (default) or "linear" interpolation of V.
    """

    price_step: float
    age_min: float
    age_max: float
    age_step: float
    price_max: Optional[float] = None
    interpolation: str = "cubic"

    def __post_init__(self):
        if not self.price_step > 0.0:
            raise ValueError(f"price_step must be positive, got {self.price_step}")
        if not self.age_step > 0.0:
            raise ValueError(f"age_step must be positive, got {self.age_step}")
        if not self.age_min >= 0.0:
            raise ValueError(f"age_min must be nonnegative, got {self.age_min}")
        if not self.age_max - self.age_min >= self.age_step:
            raise ValueError(
                f"age grid [{self.age_min}, {self.age_max}] needs at least two "
                f"points at step {self.age_step}"
            )
        if self.price_max is not None and not self.price_max >= self.price_step:
            raise ValueError(
                f"price_max must be at least price_step, got {self.price_max}"
            )
        if self.interpolation not in INTERPOLATIONS:
            raise ValueError(
                f"interpolation must be one of {INTERPOLATIONS}, got {self.interpolation}"
            )

    def ages(self) -> np.ndarray:
        count = int(round((self.age_max - self.age_min) / self.age_step)) + 1
        return np.linspace(self.age_min, self.age_max, max(count, 2))

    def prices(self, params: ModelParams) -> np.ndarray:
        top = params.cost_max if self.price_max is None else self.price_max
        if top < self.price_step:
            raise ValueError(f"price grid [0, {top}] needs at least two points")
        count = int(round(top / self.price_step)) + 1
        return np.linspace(0.0, top, max(count, 2))


def default_grid(params: ModelParams, **overrides) -> GridSpec:
    """
    Grid spanning [min(A0, A(0)), A(0) + T] at age step 1e-2 with a price
    step of 1e-3 b; keyword arguments replace any field.
    Unclipped linearized paths can fall below A0; pass age_min=0.0 for them.
    """
    fields = dict(
        price_step=1e-3 * params.cost_max,
        age_min=min(params.reset_age, params.initial_age),
        age_max=params.initial_age + params.horizon,
        age_step=1e-2,
    )
    fields.update(overrides)
    return GridSpec(**fields)


def _interpolant(ages: np.ndarray, values: np.ndarray, interpolation: str):
    """Interpolates the finite entries; NaN outside their range."""
    finite = np.isfinite(values)
    x, y = ages[finite], values[finite]
    if x.size < 2:
        return lambda query: np.full(np.shape(query), np.nan)
    if interpolation == "cubic":
        return CubicSpline(x, y, extrapolate=False)
    return lambda query: np.interp(query, x, y, left=np.nan, right=np.nan)


@dataclass(frozen=True)
class ValueTable:
    """
    Value function and greedy price per slot and grid age.

    Attributes:
        ages (np.ndarray): The age grid, shape (n,).
        values (np.ndarray): V(age, t), shape (T + 1, n); values[T] == ages ** 2.
        prices (np.ndarray): Minimising grid prices, shape (T + 1, n); zero at T.
        interpolation (str): Interpolation used between grid ages.
        dynamics (str): "true" or "linearized".
        delta (float, optional): The estimator of the linearized dynamics.
    """

    ages: np.ndarray
    values: np.ndarray
    prices: np.ndarray
    interpolation: str
    dynamics: str
    delta: Optional[float] = None

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    def _check_slot(self, t: int) -> None:
        if not 0 <= t <= self.horizon:
            raise ValueError(f"slot {t} is outside 0..{self.horizon}")

    def value_at(self, t: int, age: ArrayLike) -> ArrayLike:
        """Interpolated V(age, t); NaN off the grid."""
        self._check_slot(t)
        interpolant = _interpolant(self.ages, self.values[t], self.interpolation)
        return scalar_or_array(np.asarray(interpolant(np.asarray(age, dtype=float))))

    def price_at(self, t: int, age: ArrayLike) -> ArrayLike:
        """Greedy price linearly interpolated in the age, held at the grid ends."""
        self._check_slot(t)
        return scalar_or_array(np.interp(np.asarray(age, dtype=float), self.ages, self.prices[t]))


def _check_horizon(params: ModelParams) -> None:
    if params.horizon > MAX_ORACLE_HORIZON:
        raise ValueError(
            f"the oracle handles at most {MAX_ORACLE_HORIZON} slots, got horizon={params.horizon}"
        )


def _check_coverage(params: ModelParams, ages: np.ndarray) -> None:
    low = min(params.reset_age, params.initial_age)
    high = params.initial_age + params.horizon
    if ages[0] > low + COVERAGE_SLACK or ages[-1] < high - COVERAGE_SLACK:
        raise GridError(
            f"age grid [{ages[0]}, {ages[-1]}] does not cover the reachable "
            f"ages [{low}, {high}]"
        )


def _backward_induction(
    params: ModelParams,
    grid: GridSpec,
    transition: Transition,
    dynamics: str,
    delta: Optional[float],
) -> ValueTable:
    _check_horizon(params)
    ages = grid.ages()
    _check_coverage(params, ages)
    price_grid = grid.prices(params)
    payments = params.cost_weight * price_grid**2
    horizon = params.horizon
    rho = params.discount

    values = np.empty((horizon + 1, ages.size))
    prices = np.zeros((horizon + 1, ages.size))
    values[horizon] = ages**2

    logger.info(
        f"Backward induction over {horizon} slots, {ages.size} ages, "
        f"{price_grid.size} prices ({dynamics} dynamics)"
    )
    for t in range(horizon - 1, -1, -1):
        future = _interpolant(ages, values[t + 1], grid.interpolation)
        for start in range(0, ages.size, AGE_BLOCK_SIZE):
            block = ages[start : start + AGE_BLOCK_SIZE]
            successors = transition(block[:, None], price_grid[None, :])
            objective = block[:, None] ** 2 + payments[None, :] + rho * future(successors)
            # successors off the grid are not admissible
            objective = np.where(np.isfinite(objective), objective, np.inf)
            best = np.argmin(objective, axis=1)
            rows = np.arange(block.size)
            values[t, start : start + block.size] = objective[rows, best]
            prices[t, start : start + block.size] = price_grid[best]

    table = ValueTable(
        ages=ages,
        values=values,
        prices=prices,
        interpolation=grid.interpolation,
        dynamics=dynamics,
        delta=delta,
    )
    rollout_reachable(params, table, lambda age, price: transition(np.asarray(age), np.asarray(price)))
    return table


def rollout_reachable(
    params: ModelParams,
    table: ValueTable,
    step: Callable[[float, float], float],
) -> np.ndarray:
    """
    Follows the table's greedy prices from A(0) through the given transition
    and returns the ages visited.

    Raises:
        GridError: If an age leaves the grid or lands where V is not finite.
    """
    ages = np.empty(table.horizon + 1)
    ages[0] = params.initial_age
    for t in range(table.horizon + 1):
        age = ages[t]
        if not table.ages[0] - COVERAGE_SLACK <= age <= table.ages[-1] + COVERAGE_SLACK:
            raise GridError(
                f"age {age} reached at slot {t} lies outside the grid "
                f"[{table.ages[0]}, {table.ages[-1]}]"
            )
        clamped = min(max(age, table.ages[0]), table.ages[-1])
        if not np.isfinite(table.value_at(t, clamped)):
            raise GridError(f"value at age {age}, slot {t} is not finite")
        if t < table.horizon:
            ages[t + 1] = float(step(age, table.price_at(t, age)))
    return ages


def solve_nonlinear_dp(params: ModelParams, grid: GridSpec) -> ValueTable:
    """
    Grid dynamic program of the original problem, with the expected age moved
    by A' = A - (A - A0) alpha p / b + 1 - alpha p / b.

    Raises:
        ValueError: If the horizon exceeds MAX_ORACLE_HORIZON.
        GridError: If the grid misses reachable ages.
    """

    def transition(ages: np.ndarray, prices: np.ndarray) -> np.ndarray:
        return true_age_update(params, ages, prices)

    return _backward_induction(params, grid, transition, dynamics="true", delta=None)


def solve_linearized_dp(params: ModelParams, delta: float, grid: GridSpec) -> ValueTable:
    """
    Grid dynamic program of the linearized problem, A' = A - delta alpha p / b
    + 1 - alpha p / b. With a price grid wide enough to hold the unconstrained
    minimisers its greedy prices reproduce the closed-form prices.
    """
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")

    def transition(ages: np.ndarray, prices: np.ndarray) -> np.ndarray:
        return linearized_age_update(params, ages, prices, delta)

    return _backward_induction(params, grid, transition, dynamics="linearized", delta=delta)


def one_step_bellman_price(
    params: ModelParams,
    delta: float,
    q_next: float,
    m_next: float,
    age: float,
    price_step: float,
    price_max: Optional[float] = None,
) -> float:
    """
    Grid minimiser of (alpha / b) p^2 + rho (q_next A'^2 + m_next A') over
    p in [0, price_max] (default [0, b]), A' the linearized successor.
    Ties go to the smaller price.
    """
    if not price_step > 0.0:
        raise ValueError(f"price_step must be positive, got {price_step}")
    top = params.cost_max if price_max is None else price_max
    count = int(round(top / price_step)) + 1
    prices = np.linspace(0.0, top, max(count, 2))
    successors = linearized_age_update(params, age, prices, delta)
    objective = params.cost_weight * prices**2 + params.discount * (
        q_next * successors**2 + m_next * successors
    )
    return float(prices[np.argmin(objective)])
