import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pricing.model import (
    ModelParams,
    clip_price,
    linearized_age_step,
    stage_cost,
    true_expected_age_step,
)


@pytest.mark.parametrize(
    "field, value",
    [
        ("arrival_prob", 1.5),
        ("arrival_prob", -0.1),
        ("cost_max", 0.0),
        ("discount", 1.0),
        ("discount", 0.0),
        ("reset_age", 1.5),
        ("initial_age", -1.0),
        ("horizon", 0),
        ("horizon", 2.5),
        ("horizon", True),
    ],
)
def test_model_params_rejects_invalid_fields(reference_params, field, value):
    kwargs = dict(
        arrival_prob=0.5, cost_max=1.0, discount=0.9, reset_age=0.1, initial_age=2.0, horizon=100
    )
    kwargs[field] = value
    with pytest.raises(ValueError, match=field):
        ModelParams(**kwargs)


def test_model_params_helpers(reference_params):
    assert reference_params.cost_weight == pytest.approx(0.5)
    assert reference_params.gain(1.0) == pytest.approx(2.0)
    shorter = reference_params.with_horizon(10)
    assert shorter.horizon == 10
    assert shorter.arrival_prob == reference_params.arrival_prob


def test_true_step_examples(reference_params):
    assert true_expected_age_step(reference_params, 2.0, 1.0) == pytest.approx(1.55)
    assert true_expected_age_step(reference_params, 2.0, 0.0) == pytest.approx(3.0)
    certain = ModelParams(1.0, 1.0, 0.9, 0.1, 2.0)
    assert true_expected_age_step(certain, 2.0, 1.0) == pytest.approx(0.1)


def test_true_step_rejects_out_of_range_price(reference_params):
    with pytest.raises(ValueError):
        true_expected_age_step(reference_params, 2.0, 1.5)
    with pytest.raises(ValueError):
        true_expected_age_step(reference_params, 2.0, -0.1)


def test_true_step_is_vectorised(reference_params):
    ages = np.array([0.1, 1.0, 2.0])
    nxt = true_expected_age_step(reference_params, ages, 0.0)
    np.testing.assert_allclose(nxt, ages + 1.0)


def test_linearized_step_rejects_negative_delta(reference_params):
    with pytest.raises(ValueError, match="delta"):
        linearized_age_step(reference_params, 2.0, 0.5, -0.1)


@settings(max_examples=100, deadline=None)
@given(
    age=st.floats(min_value=0.1, max_value=50.0),
    price=st.floats(min_value=0.0, max_value=1.0),
)
def test_linearized_step_matches_true_step_at_delta_equal_to_reduction(age, price):
    params = ModelParams(0.5, 1.0, 0.9, 0.1, 2.0)
    delta = age - params.reset_age
    assert linearized_age_step(params, age, price, delta) == pytest.approx(
        true_expected_age_step(params, age, price), rel=1e-12, abs=1e-12
    )


def test_stage_cost_example(reference_params):
    assert stage_cost(reference_params, 2.0, 1.0) == pytest.approx(4.5)
    with pytest.raises(ValueError):
        stage_cost(reference_params, 2.0, 2.0)


@settings(max_examples=100, deadline=None)
@given(
    age=st.floats(min_value=0.0, max_value=20.0),
    low=st.floats(min_value=0.0, max_value=1.0),
    high=st.floats(min_value=0.0, max_value=1.0),
)
def test_stage_cost_is_convex_in_price(age, low, high):
    params = ModelParams(0.5, 1.0, 0.9, 0.1, 2.0)
    middle = stage_cost(params, age, 0.5 * (low + high))
    chord = 0.5 * (stage_cost(params, age, low) + stage_cost(params, age, high))
    assert middle <= chord + 1e-12


def test_clip_price(reference_params):
    assert clip_price(reference_params, 1.3) == 1.0
    assert clip_price(reference_params, -0.2) == 0.0
    np.testing.assert_array_equal(
        clip_price(reference_params, np.array([-1.0, 0.4, 2.0])), [0.0, 0.4, 1.0]
    )


@pytest.mark.parametrize(
    "params, age, price, expected",
    [
        (ModelParams(0.5, 1.0, 0.9, 0.5, 2.0), 2.0, 0.6, 2.25),
        (ModelParams(1.0, 1.0, 0.9, 0.5, 2.0), 3.0, 1.0, 0.5),
    ],
)
def test_true_step_reference_values(params, age, price, expected):
    assert true_expected_age_step(params, age, price) == pytest.approx(expected, rel=1e-12)


def test_linearized_step_reference_values(reference_params):
    assert linearized_age_step(reference_params, 5.0, 0.8, 2.0) == pytest.approx(4.8, rel=1e-12)
    assert linearized_age_step(reference_params, 5.0, 0.0, 2.0) == 6.0


def test_stage_cost_with_wider_cost_support():
    params = ModelParams(0.5, 2.0, 0.9, 0.1, 2.0)
    assert stage_cost(params, 1.0, 2.0) == pytest.approx(2.0, rel=1e-12)
    assert stage_cost(params, 0.0, 0.0) == 0.0


@settings(max_examples=200, deadline=None)
@given(
    alpha=st.floats(min_value=0.0, max_value=1.0),
    b=st.floats(min_value=0.1, max_value=5.0),
    reset_age=st.floats(min_value=0.0, max_value=1.0),
    age=st.floats(min_value=0.0, max_value=100.0),
    fraction=st.floats(min_value=0.0, max_value=1.0),
)
def test_true_step_stays_between_reset_and_aging(alpha, b, reset_age, age, fraction):
    params = ModelParams(alpha, b, 0.9, reset_age, 2.0)
    nxt = true_expected_age_step(params, age, fraction * b)
    assert min(reset_age, age) - 1e-9 <= nxt <= age + 1.0 + 1e-9


@settings(max_examples=100, deadline=None)
@given(
    low=st.floats(min_value=0.0, max_value=20.0),
    high=st.floats(min_value=0.0, max_value=20.0),
    price=st.floats(min_value=0.0, max_value=1.0),
)
def test_stage_cost_is_convex_and_increasing_in_age(low, high, price):
    params = ModelParams(0.5, 1.0, 0.9, 0.1, 2.0)
    low, high = min(low, high), max(low, high)
    assert stage_cost(params, low, price) <= stage_cost(params, high, price)
    middle = stage_cost(params, 0.5 * (low + high), price)
    chord = 0.5 * (stage_cost(params, low, price) + stage_cost(params, high, price))
    assert middle <= chord + 1e-9
