"""
Pricing policies: rules mapping a slot and an age to a posted price.

Every policy evaluates arrays of ages in one call, which the simulator relies
on when it prices all replications of a slot together.
"""

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from pricing.model import (
    ArrayLike,
    ModelParams,
    check_price,
    clip_price,
    linearized_age_step,
    scalar_or_array,
    true_expected_age_step,
)
from pricing.riccati import RiccatiTables, Trajectory, discounted_cost, price_at
from pricing.steady_state import SteadyState, steady_price

DYNAMICS = ("true", "linearized")


class AbstractPricingPolicy(ABC):
    """Base class of every pricing policy."""

    name = "abstract"

    def __init__(self, params: ModelParams):
        self.params = params

    @abstractmethod
    def price(self, t: int, age: ArrayLike) -> ArrayLike:
        """
        Price posted at slot t for the given age(s).

        Args:
            t (int): Slot in 0..T.
            age (float | np.ndarray): Current age(s), nonnegative.

        Returns:
            float | np.ndarray: Price(s) in [0, b].
        """
        raise NotImplementedError

    def __call__(self, t: int, age: ArrayLike) -> ArrayLike:
        return self.price(t, age)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"


class FiniteHorizonPolicy(AbstractPricingPolicy):
    """The finite-horizon approximate price built from the Q/M tables."""

    name = "finite_horizon"

    def __init__(self, params: ModelParams, tables: RiccatiTables, clip: bool = True):
        super().__init__(params)
        if tables.horizon != params.horizon:
            raise ValueError(
                f"tables cover {tables.horizon} slots but params.horizon={params.horizon}"
            )
        self.tables = tables
        self.clip = clip

    def price(self, t: int, age: ArrayLike) -> ArrayLike:
        return price_at(self.params, self.tables, t, age, clip=self.clip)


class SteadyStatePolicy(AbstractPricingPolicy):
    """Stationary price with the steady coefficients at every slot."""

    name = "steady_state"

    def __init__(self, params: ModelParams, steady: SteadyState, clip: bool = True):
        super().__init__(params)
        self.steady = steady
        self.clip = clip

    def price(self, t: int, age: ArrayLike) -> ArrayLike:
        return steady_price(self.params, self.steady, age, clip=self.clip)


class ConstantPricePolicy(AbstractPricingPolicy):
    name = "constant"

    def __init__(self, params: ModelParams, price: float):
        super().__init__(params)
        check_price(params, price)
        self.constant_price = float(price)

    def price(self, t: int, age: ArrayLike) -> ArrayLike:
        return scalar_or_array(np.full_like(np.asarray(age, dtype=float), self.constant_price))


class OracleTablePolicy(AbstractPricingPolicy):
    """
    Greedy prices of an oracle value table, linearly interpolated in the age
    and held at the edge values outside the grid.
    """

    name = "oracle"

    def __init__(self, params: ModelParams, table):
        super().__init__(params)
        if table.horizon != params.horizon:
            raise ValueError(
                f"table covers {table.horizon} slots but params.horizon={params.horizon}"
            )
        self.table = table

    def price(self, t: int, age: ArrayLike) -> ArrayLike:
        return clip_price(self.params, self.table.price_at(t, age))


PRICING_POLICIES = {
    FiniteHorizonPolicy.name: FiniteHorizonPolicy,
    SteadyStatePolicy.name: SteadyStatePolicy,
    ConstantPricePolicy.name: ConstantPricePolicy,
    OracleTablePolicy.name: OracleTablePolicy,
}


def get_pricing_policy(name: str) -> type:
    """
    Looks up a pricing policy class by name.

    Args:
        name (str): One of "finite_horizon", "steady_state", "constant", "oracle".

    Returns:
        type: The policy class.

    Raises:
        ValueError: If the name is not registered.
    """
    if name not in PRICING_POLICIES:
        raise ValueError(
            f"Pricing policy '{name}' is not supported. "
            f"Supported policies: {sorted(PRICING_POLICIES)}"
        )
    return PRICING_POLICIES[name]


def expected_age_path(
    params: ModelParams,
    policy: AbstractPricingPolicy,
    dynamics: str = "true",
    delta: Optional[float] = None,
) -> Trajectory:
    """
    Deterministic open-loop evaluation: prices the expected age of each slot
    and moves it with the chosen expected-age dynamics.

    Raises:
        ValueError: On an unknown dynamics name, a missing delta for the
            linearized dynamics, or a policy price outside [0, b].
    """
    if dynamics not in DYNAMICS:
        raise ValueError(f"dynamics must be one of {DYNAMICS}, got {dynamics}")
    if dynamics == "linearized" and delta is None:
        raise ValueError("the linearized dynamics need a delta")

    horizon = params.horizon
    ages = np.empty(horizon + 1)
    prices = np.empty(horizon + 1)
    ages[0] = params.initial_age
    for t in range(horizon + 1):
        prices[t] = policy.price(t, ages[t])
        if t == horizon:
            break
        if dynamics == "true":
            ages[t + 1] = true_expected_age_step(params, ages[t], prices[t])
        else:
            ages[t + 1] = linearized_age_step(params, ages[t], prices[t], delta)
    return Trajectory.build(params, ages, prices)


def true_dynamics_cost(params: ModelParams, policy: AbstractPricingPolicy) -> float:
    """Discounted cost of a policy on the expected-age path of the true dynamics."""
    return discounted_cost(expected_age_path(params, policy, dynamics="true"), params)
