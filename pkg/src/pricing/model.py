"""
Exogenous parameters of the pricing problem and the three age dynamics.

A content provider posts a price p(t) each slot. With probability alpha a
user shows up; the user samples and sends an update when its private cost,
uniform on [0, b], does not exceed the price. A received update resets the
age of information to the transmission delay A0, otherwise the age grows by
one slot. Expected ages are fractional, so every age here is a nonnegative
real measured in slots.
"""

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ModelParams:
    """
    All exogenous scalars of the pricing problem.

    Attributes:
        arrival_prob (float): Probability alpha of one user arrival per slot.
        cost_max (float): Upper end b of the uniform sampling-cost support.
        discount (float): Per-slot discount factor rho, strictly inside (0, 1).
        reset_age (float): Age A0 right after a received update, in [0, 1].
        initial_age (float): Age A(0) at slot 0.
        horizon (int): Number of slots T of a finite-horizon problem.
    """

    arrival_prob: float
    cost_max: float
    discount: float
    reset_age: float
    initial_age: float
    horizon: int = 100

    def __post_init__(self):
        if not 0.0 <= self.arrival_prob <= 1.0:
            raise ValueError(
                f"arrival_prob must lie in [0, 1], got {self.arrival_prob}"
            )
        if not self.cost_max > 0.0:
            raise ValueError(f"cost_max must be positive, got {self.cost_max}")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")
        if not 0.0 <= self.reset_age <= 1.0:
            raise ValueError(f"reset_age must lie in [0, 1], got {self.reset_age}")
        if not self.initial_age >= 0.0:
            raise ValueError(
                f"initial_age must be nonnegative, got {self.initial_age}"
            )
        if isinstance(self.horizon, bool) or int(self.horizon) != self.horizon:
            raise ValueError(f"horizon must be an integer, got {self.horizon}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def cost_weight(self) -> float:
        """Weight c = alpha / b of the squared price in the stage cost."""
        return self.arrival_prob / self.cost_max

    def gain(self, delta: float) -> float:
        """The recurring constant k = alpha (delta + 1)^2 / b."""
        return self.arrival_prob * (delta + 1.0) ** 2 / self.cost_max

    def with_horizon(self, horizon: int) -> "ModelParams":
        """Returns a copy of the parameters with another horizon."""
        return replace(self, horizon=horizon)


def scalar_or_array(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def check_age(age: ArrayLike) -> None:
    if np.any(np.asarray(age) < 0.0):
        raise ValueError(f"age must be nonnegative, got {age}")


def check_price(params: ModelParams, price: ArrayLike) -> None:
    price = np.asarray(price)
    if np.any(price < 0.0) or np.any(price > params.cost_max):
        raise ValueError(
            f"price must lie in [0, {params.cost_max}], got {price}; "
            "prices have to be clipped before they reach the dynamics"
        )


def clip_price(params: ModelParams, price: ArrayLike) -> ArrayLike:
    """Projects a price (or an array of prices) onto [0, b]."""
    return scalar_or_array(np.clip(price, 0.0, params.cost_max))


def true_age_update(params: ModelParams, age: ArrayLike, price: ArrayLike) -> ArrayLike:
    """
    Unchecked, vectorised expected-age transition of the original problem.

    A(t+1) = A(t) - (A(t) - A0) alpha p / b + (1 - alpha p / b)
    """
    acceptance = params.arrival_prob * np.asarray(price, dtype=float) / params.cost_max
    age = np.asarray(age, dtype=float)
    return scalar_or_array(age - (age - params.reset_age) * acceptance + (1.0 - acceptance))


def linearized_age_update(
    params: ModelParams, age: ArrayLike, price: ArrayLike, delta: float
) -> ArrayLike:
    """
    Unchecked, vectorised expected-age transition with the age reduction per
    update replaced by the constant estimator delta.

    A(t+1) = A(t) - delta alpha p / b + (1 - alpha p / b)
    """
    acceptance = params.arrival_prob * np.asarray(price, dtype=float) / params.cost_max
    age = np.asarray(age, dtype=float)
    return scalar_or_array(age - delta * acceptance + (1.0 - acceptance))


def true_expected_age_step(params: ModelParams, age: ArrayLike, price: ArrayLike) -> ArrayLike:
    """
    Expected age one slot ahead under the nonlinear dynamics.

    Args:
        params (ModelParams): Model parameters.
        age (float | np.ndarray): Current expected age, nonnegative.
        price (float | np.ndarray): Posted price, within [0, b].

    Returns:
        float | np.ndarray: The expected age of the next slot.

    Raises:
        ValueError: If a price lies outside [0, b] or an age is negative.
    """
    check_age(age)
    check_price(params, price)
    return true_age_update(params, age, price)


def linearized_age_step(
    params: ModelParams, age: ArrayLike, price: ArrayLike, delta: float
) -> ArrayLike:
    """
    Expected age one slot ahead under the linearized dynamics.

    With delta equal to age - A0 the result coincides with
    true_expected_age_step.

    Raises:
        ValueError: If delta is negative or a price lies outside [0, b].
    """
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    check_price(params, price)
    return linearized_age_update(params, age, price, delta)


def stage_cost(params: ModelParams, age: ArrayLike, price: ArrayLike) -> ArrayLike:
    """
    Per-slot cost: squared age plus the expected payment (alpha / b) p^2.

    Raises:
        ValueError: If a price lies outside [0, b] or an age is negative.
    """
    check_age(age)
    check_price(params, price)
    age = np.asarray(age, dtype=float)
    price = np.asarray(price, dtype=float)
    return scalar_or_array(age**2 + params.cost_weight * price**2)
