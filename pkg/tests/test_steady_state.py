import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pricing.model import ModelParams
from pricing.riccati import backward_recursion
from pricing.steady_state import (
    InfeasibleParametersError,
    build_steady_state,
    check_feasibility,
    convergence_lag,
    delta_equation,
    epsilon_gap,
    limit_age,
    solve_delta_infinite,
    steady_expected_age,
    steady_m,
    steady_price,
    steady_q,
)

model_params = st.builds(
    ModelParams,
    arrival_prob=st.floats(min_value=0.05, max_value=1.0),
    cost_max=st.floats(min_value=0.2, max_value=5.0),
    discount=st.floats(min_value=0.05, max_value=0.99),
    reset_age=st.floats(min_value=0.0, max_value=1.0),
    initial_age=st.floats(min_value=0.0, max_value=5.0),
)


def test_steady_q_at_zero_delta(reference_params):
    expected = (0.35 + math.sqrt(1.9225)) / 0.9
    assert steady_q(reference_params, 0.0) == pytest.approx(expected, rel=1e-12)
    assert steady_q(reference_params, 0.0) == pytest.approx(1.929492, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(params=model_params, delta=st.floats(min_value=0.0, max_value=5.0))
def test_steady_coefficients_solve_their_fixed_point_equations(params, delta):
    rho, gain = params.discount, params.gain(delta)
    q = steady_q(params, delta)
    m = steady_m(params, delta, q)
    denominator = 1.0 + rho * q * gain
    assert q >= 1.0
    assert m >= 0.0
    assert abs(q - 1.0 - rho * q / denominator) < 1e-9
    assert abs(m - rho * (m + 2.0 * q) / denominator) < 1e-9


@settings(max_examples=200, deadline=None)
@given(params=model_params, delta=st.floats(min_value=0.0, max_value=5.0))
def test_limit_age_matches_closed_form(params, delta):
    rho, alpha, b = params.discount, params.arrival_prob, params.cost_max
    q = steady_q(params, delta)
    closed_form = (1 - rho) * (1 + rho * q * params.gain(delta)) / (
        rho * q * (delta + 1) ** 2 * (alpha / b * (1 - rho) + rho * q * (alpha * (delta + 1) / b) ** 2)
    )
    assert limit_age(params, delta, q, steady_m(params, delta, q)) == pytest.approx(
        closed_form, rel=1e-9
    )


def test_limit_age_reference_value(reference_params):
    q = steady_q(reference_params, 0.0)
    assert limit_age(reference_params, 0.0, q, steady_m(reference_params, 0.0, q)) == pytest.approx(
        0.2222, abs=1e-4
    )


def test_limit_age_without_arrivals_is_infinite():
    params = ModelParams(0.0, 1.0, 0.9, 0.1, 2.0)
    q = steady_q(params, 0.0)
    assert q == pytest.approx(10.0)
    assert math.isinf(limit_age(params, 0.0, q, steady_m(params, 0.0, q)))
    with pytest.raises(InfeasibleParametersError):
        solve_delta_infinite(params)


def test_infinite_delta_root(reference_params):
    steady = solve_delta_infinite(reference_params)
    assert abs(delta_equation(reference_params, steady.delta)) < 1e-10
    assert steady.delta == pytest.approx(0.088, abs=5e-3)
    assert steady.limit_age == pytest.approx(reference_params.reset_age + steady.delta, abs=1e-9)


def test_delta_equation_changes_sign_once(reference_params):
    scan = np.linspace(0.0, 1000.0, 2000)
    values = np.array([delta_equation(reference_params, delta) for delta in scan])
    assert np.count_nonzero(np.diff(np.sign(values)) != 0) == 1


def test_feasibility_flags(reference_params):
    steady = solve_delta_infinite(reference_params)
    assert steady.condition1
    # alpha = 0.5 < 1 / (delta + 1): the limit price b / (alpha (delta + 1)) exceeds b
    assert not steady.condition2
    assert not steady.feasible
    assert steady.limit_price == 1.0

    late = ModelParams(0.5, 1.0, 0.9, 0.5, 2.0)
    assert check_feasibility(late, 0.0) == (False, False)
    with pytest.raises(InfeasibleParametersError):
        solve_delta_infinite(late)


def test_feasibility_threshold_on_reset_age():
    below = ModelParams(0.5, 1.0, 0.9, 0.115, 2.0)
    above = ModelParams(0.5, 1.0, 0.9, 0.1155, 2.0)
    assert check_feasibility(below, 0.0)[0]
    assert not check_feasibility(above, 0.0)[0]


def test_certain_arrivals_with_short_delay_are_feasible():
    params = ModelParams(1.0, 1.0, 0.9, 0.05, 2.0)
    steady = solve_delta_infinite(params)
    assert steady.feasible
    assert steady.limit_price == pytest.approx(1.0 / (steady.delta + 1.0))


def test_stationary_price_at_limit_age(reference_params):
    steady = solve_delta_infinite(reference_params)
    price = steady_price(reference_params, steady, steady.limit_age, clip=False)
    assert price == pytest.approx(1.0 / (0.5 * (steady.delta + 1.0)), rel=1e-9)
    assert steady_price(reference_params, steady, steady.limit_age) == 1.0


def test_steady_expected_age_path(reference_params):
    steady = solve_delta_infinite(reference_params)
    ages = steady_expected_age(reference_params, steady.delta, steady.q, steady.m, np.arange(1001))
    assert ages[0] == pytest.approx(reference_params.initial_age)
    assert ages[-1] == pytest.approx(steady.limit_age, abs=1e-8)
    assert steady_expected_age(reference_params, steady.delta, steady.q, steady.m, 0) == pytest.approx(2.0)


def test_finite_tables_converge_to_steady_values(reference_params):
    steady = build_steady_state(reference_params, 0.3)
    tables = backward_recursion(reference_params.with_horizon(500), 0.3)
    assert abs(tables.q[0] - steady.q) < 1e-6
    assert abs(tables.m[0] - steady.m) < 1e-6


def test_convergence_lag(reference_params):
    steady = build_steady_state(reference_params, 0.3)
    tables = backward_recursion(reference_params, 0.3)
    lag = convergence_lag(tables, steady.q, steady.m, tolerance=1e-9)
    assert 0 < lag < 50
    deviation = np.maximum(np.abs(tables.q - steady.q), np.abs(tables.m - steady.m))
    assert np.all(deviation[: tables.horizon - lag + 1] <= 1e-9)
    assert deviation[tables.horizon - lag + 1] > 1e-9


def test_gap_is_nonnegative_and_shrinks_for_relaxed_policies(reference_params):
    rows = epsilon_gap(reference_params, [20, 50, 100, 200], clip=False)
    gaps = [row.gap for row in rows]
    assert all(gap >= -1e-9 for gap in gaps)
    assert gaps[-1] < gaps[0]
    assert [row.horizon for row in rows] == [20, 50, 100, 200]
    assert all(row.converged for row in rows)


def test_gap_with_clipped_prices(reference_params):
    # every price clips to b, so the policies differ only in the terminal payment
    rows = epsilon_gap(reference_params, [20, 50])
    for row in rows:
        assert row.gap == pytest.approx(0.5 * 0.9**row.horizon, rel=1e-6, abs=1e-9)
        assert row.tail_bound >= 0.0


def test_gap_for_a_single_slot(reference_params):
    (row,) = epsilon_gap(reference_params, [1])
    assert row.horizon == 1
    assert np.isfinite(row.finite_cost)
    assert np.isfinite(row.steady_cost)


def test_gap_with_infinite_delta(reference_params):
    rows = epsilon_gap(reference_params, [20, 50], delta_mode="infinite")
    assert len(rows) == 2
    late = ModelParams(0.5, 1.0, 0.9, 0.5, 2.0)
    with pytest.raises(InfeasibleParametersError):
        epsilon_gap(late, [20], delta_mode="infinite")


def test_gap_rejects_bad_arguments(reference_params):
    with pytest.raises(ValueError):
        epsilon_gap(reference_params, [0])
    with pytest.raises(ValueError):
        epsilon_gap(reference_params, [10], delta_mode="other")
