import numpy as np
import pytest
from joblib import parallel_backend

from pricing.fixed_point import solve_delta_finite
from pricing.model import ModelParams
from pricing.policies import ConstantPricePolicy, FiniteHorizonPolicy
from pricing.riccati import backward_recursion
from pricing.simulator import (
    SimConfig,
    compare_to_analytic,
    replication_uniforms,
    run,
)


@pytest.fixture
def short_params() -> ModelParams:
    return ModelParams(0.5, 1.0, 0.9, 0.1, 2.0, horizon=20)


def test_certain_acceptance_resets_every_slot():
    params = ModelParams(1.0, 1.0, 0.9, 0.1, 2.0, horizon=10)
    report = run(params, SimConfig(ConstantPricePolicy(params, 1.0), replications=50, seed=3))
    np.testing.assert_array_equal(report.mean_age_path[1:], 0.1)
    assert report.mean_age_path[0] == 2.0
    np.testing.assert_array_equal(report.acceptance_rate_path, 1.0)
    expected_cost = 4.0 + 1.0 + sum(0.9**t * (0.01 + 1.0) for t in range(1, 11))
    assert report.mean_discounted_cost == pytest.approx(expected_cost, rel=1e-12)


def test_zero_price_never_resets(short_params):
    report = run(short_params, SimConfig(ConstantPricePolicy(short_params, 0.0), replications=50))
    np.testing.assert_allclose(report.mean_age_path, 2.0 + np.arange(21))
    np.testing.assert_array_equal(report.acceptance_rate_path, 0.0)
    np.testing.assert_allclose(report.std_age_path, 0.0, atol=1e-6)


def test_same_seed_same_report(short_params):
    config = SimConfig(ConstantPricePolicy(short_params, 0.6), replications=3000, seed=11)
    first = run(short_params, config)
    with parallel_backend("threading"):
        second = run(short_params, SimConfig(config.policy, replications=3000, seed=11, n_jobs=2))
    np.testing.assert_array_equal(first.mean_age_path, second.mean_age_path)
    np.testing.assert_array_equal(first.acceptance_rate_path, second.acceptance_rate_path)
    assert first.mean_discounted_cost == second.mean_discounted_cost


def test_replication_streams_do_not_depend_on_count():
    np.testing.assert_array_equal(replication_uniforms(5, 7, 10), replication_uniforms(5, 7, 10))
    assert not np.array_equal(replication_uniforms(5, 7, 10), replication_uniforms(5, 8, 10))


def test_moments_are_consistent(short_params):
    report = run(short_params, SimConfig(ConstantPricePolicy(short_params, 0.6), replications=500))
    assert np.all(report.mean_sq_age_path >= report.mean_age_path**2 - 1e-9)
    assert np.all((report.acceptance_rate_path >= 0.0) & (report.acceptance_rate_path <= 1.0))
    assert np.all(report.acceptance_se_path >= 0.0)
    assert report.discounted_cost_se >= 0.0
    frame = report.to_dataframe()
    assert len(frame) == 21
    assert list(frame["mode"].unique()) == ["closed_loop"]


@pytest.mark.parametrize(
    "kwargs",
    [{"replications": 0}, {"seed": -1}, {"mode": "batch"}, {"replications": 2.5}],
)
def test_sim_config_validation(short_params, kwargs):
    with pytest.raises(ValueError):
        SimConfig(ConstantPricePolicy(short_params, 0.5), **kwargs)
    with pytest.raises(ValueError):
        SimConfig(policy="constant")


def test_z_scores_need_enough_replications(short_params):
    policy = ConstantPricePolicy(short_params, 0.6)
    report = run(short_params, SimConfig(policy, replications=10))
    with pytest.raises(ValueError, match="30"):
        compare_to_analytic(report, short_params, policy)


def test_open_loop_mean_age_follows_expected_age(short_params):
    estimate = solve_delta_finite(short_params)
    policy = FiniteHorizonPolicy(short_params, backward_recursion(short_params, estimate.value))
    report = run(short_params, SimConfig(policy, replications=4000, seed=5, mode="open_loop"))
    summary = compare_to_analytic(report, short_params, policy)
    assert summary.age_z[0] == 0.0
    assert summary.max_abs_z < 5.0
    assert summary.max_abs_acceptance_z < 5.0


@pytest.mark.slow
def test_acceptance_rate_of_constant_price(reference_params):
    policy = ConstantPricePolicy(reference_params, 0.6)
    report = run(reference_params, SimConfig(policy, replications=100_000, seed=42))
    rates = report.acceptance_rate_path
    se = np.sqrt(0.3 * 0.7 / report.replications)
    pooled_se = se / np.sqrt(len(rates))
    assert abs(rates.mean() - 0.3) <= 3 * pooled_se
    assert np.max(np.abs(rates - 0.3) / se) < 4.0
    summary = compare_to_analytic(report, reference_params, policy)
    assert summary.max_abs_z < 4.0


class AgeRecordingPolicy(ConstantPricePolicy):
    """Constant price that keeps the realised ages it was asked to price."""

    def __init__(self, params, price):
        super().__init__(params, price)
        self.seen = {}

    def price(self, t, age):
        self.seen.setdefault(t, []).append(np.array(age, dtype=float, copy=True))
        return super().price(t, age)


def test_realised_ages_are_reset_or_initial_age_plus_slots(short_params):
    policy = AgeRecordingPolicy(short_params, 0.6)
    run(short_params, SimConfig(policy, replications=300, seed=8))
    for t in range(short_params.horizon + 1):
        ages = np.concatenate(policy.seen[t])
        assert len(ages) == 300
        never_reset = np.isclose(ages, short_params.initial_age + t)
        since_reset = ages - short_params.reset_age
        steps = np.round(since_reset)
        after_reset = np.isclose(since_reset, steps) & (steps >= 0) & (steps <= t - 1)
        assert np.all(never_reset | after_reset)
