import numpy as np
import pytest

from pricing.fixed_point import solve_delta_finite
from pricing.policies import (
    ConstantPricePolicy,
    FiniteHorizonPolicy,
    SteadyStatePolicy,
    expected_age_path,
    get_pricing_policy,
    true_dynamics_cost,
)
from pricing.riccati import backward_recursion, discounted_cost, forward_trajectory
from pricing.steady_state import solve_delta_infinite


@pytest.mark.parametrize(
    "name, policy_class",
    [
        ("finite_horizon", FiniteHorizonPolicy),
        ("steady_state", SteadyStatePolicy),
        ("constant", ConstantPricePolicy),
    ],
)
def test_registry(name, policy_class):
    assert get_pricing_policy(name) is policy_class


def test_registry_rejects_unknown_name():
    with pytest.raises(ValueError, match="not supported"):
        get_pricing_policy("auction")


def test_constant_policy(reference_params):
    policy = ConstantPricePolicy(reference_params, 0.6)
    assert policy.price(0, 3.0) == 0.6
    np.testing.assert_array_equal(policy(5, np.array([0.1, 4.0])), [0.6, 0.6])
    with pytest.raises(ValueError):
        ConstantPricePolicy(reference_params, 1.2)


def test_finite_policy_matches_forward_trajectory(reference_params):
    estimate = solve_delta_finite(reference_params)
    tables = backward_recursion(reference_params, estimate.value)
    policy = FiniteHorizonPolicy(reference_params, tables)
    path = expected_age_path(reference_params, policy, dynamics="linearized", delta=estimate.value)
    reference = forward_trajectory(reference_params, tables)
    np.testing.assert_allclose(path.expected_age, reference.expected_age)
    np.testing.assert_allclose(path.price, reference.price)
    with pytest.raises(ValueError):
        FiniteHorizonPolicy(reference_params.with_horizon(10), tables)


def test_steady_policy_is_stationary(reference_params):
    policy = SteadyStatePolicy(reference_params, solve_delta_infinite(reference_params))
    assert policy.price(0, 0.3) == policy.price(reference_params.horizon, 0.3)


def test_zero_price_ages_one_slot_per_slot(reference_params):
    params = reference_params.with_horizon(5)
    path = expected_age_path(params, ConstantPricePolicy(params, 0.0))
    np.testing.assert_allclose(path.expected_age, 2.0 + np.arange(6))


def test_linearized_path_needs_delta(reference_params):
    with pytest.raises(ValueError, match="delta"):
        expected_age_path(reference_params, ConstantPricePolicy(reference_params, 0.5), dynamics="linearized")
    with pytest.raises(ValueError):
        expected_age_path(reference_params, ConstantPricePolicy(reference_params, 0.5), dynamics="other")


def test_true_dynamics_cost(reference_params):
    policy = ConstantPricePolicy(reference_params, 0.4)
    path = expected_age_path(reference_params, policy)
    assert true_dynamics_cost(reference_params, policy) == pytest.approx(discounted_cost(path, reference_params))
