"""
Finite-horizon approximate pricing.

Under the linearized dynamics the value function is quadratic in the age,
V(A, t) = Q_t A^2 + M_t A + S_t, and the optimal price is linear in the age.
Q_t and M_t follow a backward Riccati-style recursion from Q_T = 1, M_T = 0.
"""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
import pandas as pd

from pricing.model import (
    ArrayLike,
    ModelParams,
    scalar_or_array,
    check_age,
    clip_price,
    linearized_age_step,
    linearized_age_update,
)

PriceRule = Callable[[int, ArrayLike], ArrayLike]

TRAJECTORY_COLUMNS = [
    "t",
    "price",
    "expected_age",
    "stage_cost",
    "discounted_stage_cost",
]


def _read_only(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.flags.writeable = False
    return values


@dataclass(frozen=True)
class RiccatiTables:
    """
    Backward coefficient sequences Q_0..Q_T and M_0..M_T built for one delta.

    Attributes:
        delta (float): Estimator of the age reduction the tables were built with.
        q (np.ndarray): Quadratic coefficients, q[T] == 1.
        m (np.ndarray): Linear coefficients, m[T] == 0.
    """

    delta: float
    q: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        if len(self.q) != len(self.m):
            raise ValueError("q and m must have the same length")
        object.__setattr__(self, "q", _read_only(self.q))
        object.__setattr__(self, "m", _read_only(self.m))

    @property
    def horizon(self) -> int:
        return len(self.q) - 1


@dataclass(frozen=True)
class Trajectory:
    """Per-slot records t = 0..T of a priced expected-age path."""

    t: np.ndarray
    price: np.ndarray
    expected_age: np.ndarray
    stage_cost: np.ndarray
    discounted_stage_cost: np.ndarray

    @classmethod
    def build(
        cls, params: ModelParams, ages: np.ndarray, prices: np.ndarray
    ) -> "Trajectory":
        """
        Assembles a trajectory from per-slot ages and prices, computing the
        stage cost A^2 + (alpha / b) p^2 and its discounted value rho^t * cost.
        """
        ages = np.asarray(ages, dtype=float)
        prices = np.asarray(prices, dtype=float)
        if ages.shape != prices.shape or ages.ndim != 1:
            raise ValueError("ages and prices must be 1-d arrays of equal length")
        slots = np.arange(len(ages))
        costs = ages**2 + params.cost_weight * prices**2
        return cls(
            t=slots,
            price=prices,
            expected_age=ages,
            stage_cost=costs,
            discounted_stage_cost=params.discount**slots * costs,
        )

    @property
    def horizon(self) -> int:
        return len(self.t) - 1

    def __len__(self) -> int:
        return len(self.t)

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {column: getattr(self, column) for column in TRAJECTORY_COLUMNS}
        )


def backward_recursion(params: ModelParams, delta: float) -> RiccatiTables:
    """
    Builds Q_t and M_t for t = T..0 from Q_T = 1, M_T = 0.

        Q_t = 1 + rho Q_{t+1} / (1 + rho Q_{t+1} k)
        M_t = rho (M_{t+1} + 2 Q_{t+1}) / (1 + rho Q_{t+1} k)

    with k = alpha (delta + 1)^2 / b. Denominators are at least 1.

    Args:
        params (ModelParams): Model parameters; params.horizon sets T.
        delta (float): Nonnegative estimator of the age reduction per update.

    Returns:
        RiccatiTables: Tables of length T + 1.
    """
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    horizon = params.horizon
    rho = params.discount
    gain = params.gain(delta)

    q = np.empty(horizon + 1)
    m = np.empty(horizon + 1)
    q[horizon] = 1.0
    m[horizon] = 0.0
    for t in range(horizon - 1, -1, -1):
        denominator = 1.0 + rho * q[t + 1] * gain
        q[t] = 1.0 + rho * q[t + 1] / denominator
        m[t] = rho * (m[t + 1] + 2.0 * q[t + 1]) / denominator
    return RiccatiTables(delta=float(delta), q=q, m=m)


def recursion_residuals(
    params: ModelParams, tables: RiccatiTables
) -> Tuple[float, float]:
    """Largest re-substitution residuals of the Q and M recursions."""
    rho = params.discount
    gain = params.gain(tables.delta)
    q_next, m_next = tables.q[1:], tables.m[1:]
    denominator = 1.0 + rho * q_next * gain
    q_residual = np.abs(tables.q[:-1] - 1.0 - rho * q_next / denominator)
    m_residual = np.abs(tables.m[:-1] - rho * (m_next + 2.0 * q_next) / denominator)
    terminal = max(abs(tables.q[-1] - 1.0), abs(tables.m[-1]))
    return (
        float(max(q_residual.max(initial=0.0), terminal)),
        float(max(m_residual.max(initial=0.0), terminal)),
    )


def optimal_price(
    params: ModelParams,
    delta: float,
    q_next: float,
    m_next: float,
    age: ArrayLike,
) -> ArrayLike:
    """
    Unclipped minimiser of the one-step Bellman objective given the next
    slot's value coefficients:

        p = [rho M' (delta+1) + 2 rho (delta+1) Q' (A+1)] / [2 + 2 rho Q' k]
    """
    rho = params.discount
    scale = delta + 1.0
    age = np.asarray(age, dtype=float)
    numerator = rho * m_next * scale + 2.0 * rho * scale * q_next * (age + 1.0)
    denominator = 2.0 + 2.0 * rho * q_next * params.gain(delta)
    return scalar_or_array(numerator / denominator)


def price_at(
    params: ModelParams,
    tables: RiccatiTables,
    t: int,
    age: ArrayLike,
    clip: bool = True,
) -> ArrayLike:
    """
    Finite-horizon approximate price at slot t for the given age(s).

    Args:
        params (ModelParams): Model parameters.
        tables (RiccatiTables): Tables built for params.
        t (int): Slot in 0..T; the terminal slot always prices at 0.
        age (float | np.ndarray): Expected age(s), nonnegative.
        clip (bool): Project the price onto [0, b]. Defaults to True.

    Returns:
        float | np.ndarray: The price(s).
    """
    if not 0 <= t <= tables.horizon:
        raise ValueError(f"slot {t} is outside 0..{tables.horizon}")
    check_age(age)
    if t == tables.horizon:
        return scalar_or_array(np.zeros_like(np.asarray(age, dtype=float)))
    price = optimal_price(
        params, tables.delta, tables.q[t + 1], tables.m[t + 1], age
    )
    return clip_price(params, price) if clip else price


def rollout(
    params: ModelParams,
    price_rule: PriceRule,
    delta: float,
    clip: bool = True,
) -> Trajectory:
    """
    Drives the linearized dynamics forward from A(0) for slots 0..T under a
    (t, age) -> price rule. With clip=False the rule's raw prices are used,
    which is the relaxed problem the closed forms describe.
    """
    horizon = params.horizon
    ages = np.empty(horizon + 1)
    prices = np.empty(horizon + 1)
    ages[0] = params.initial_age
    for t in range(horizon + 1):
        price = price_rule(t, ages[t])
        if clip:
            price = clip_price(params, price)
        prices[t] = price
        if t < horizon:
            if clip:
                ages[t + 1] = linearized_age_step(params, ages[t], price, delta)
            else:
                ages[t + 1] = linearized_age_update(params, ages[t], price, delta)
    return Trajectory.build(params, ages, prices)


def forward_trajectory(
    params: ModelParams, tables: RiccatiTables, clip: bool = True
) -> Trajectory:
    """
    Expected-age path under the finite-horizon approximate prices.

    The path iterates the linearized dynamics with the emitted prices; when
    clip is True a price above b is replaced by b before it moves the age.
    """
    if tables.horizon != params.horizon:
        raise ValueError(
            f"tables cover {tables.horizon} slots but params.horizon={params.horizon}"
        )

    def price_rule(t: int, age: float) -> float:
        return price_at(params, tables, t, age, clip=False)

    return rollout(params, price_rule, tables.delta, clip=clip)


def expected_age_closed_form(params: ModelParams, tables: RiccatiTables) -> np.ndarray:
    """
    Closed-form expected ages A(0)..A(T) under the unclipped prices:

        A(t) = prod_{i<=t} r_i A(0) + sum_{s=1}^{t} g_s prod_{s<i<=t} r_i

    with r_i = 1 / (1 + rho Q_i k) and g_s = (2 - rho M_s k) / (2 + 2 rho Q_s k).
    Products are accumulated in log space.
    """
    rho = params.discount
    gain = params.gain(tables.delta)
    q, m = tables.q[1:], tables.m[1:]
    ratios = 1.0 / (1.0 + rho * q * gain)
    offsets = (2.0 - rho * m * gain) / (2.0 + 2.0 * rho * q * gain)
    log_products = np.concatenate(([0.0], np.cumsum(np.log(ratios))))

    ages = np.empty(tables.horizon + 1)
    ages[0] = params.initial_age
    for t in range(1, tables.horizon + 1):
        tail = np.exp(log_products[t] - log_products[1 : t + 1])
        ages[t] = np.exp(log_products[t]) * params.initial_age + np.dot(
            offsets[:t], tail
        )
    return ages


def discounted_cost(trajectory: Trajectory, params: ModelParams) -> float:
    """Discounted total sum_t rho^t (A(t)^2 + (alpha / b) p(t)^2)."""
    ages = np.asarray(trajectory.expected_age, dtype=float)
    prices = np.asarray(trajectory.price, dtype=float)
    weights = params.discount ** np.arange(len(ages))
    return float(np.sum(weights * (ages**2 + params.cost_weight * prices**2)))
