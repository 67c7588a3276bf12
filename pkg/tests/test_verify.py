import pytest

from pricing.riccati import backward_recursion
from run_config import load_run_config
from verify import BELLMAN_TOLERANCE, check_bellman_consistency, check_recursion


@pytest.mark.parametrize("reset_age", [0.1, 0.5])
def test_bellman_consistency_holds_below_reset_age(tmp_path, reset_age):
    # with A0 = 0.5 the unclipped linearized path dips under A0
    config = load_run_config(
        overrides={"reset_age": reset_age, "output_dir": str(tmp_path / "out")}
    )
    [check] = check_bellman_consistency(config, backward_recursion)
    assert check.check == "bellman_consistency"
    assert check.measured <= BELLMAN_TOLERANCE
    assert check.passed


def test_recursion_checks_pass_for_exact_tables(reference_params):
    checks = check_recursion(reference_params, backward_recursion(reference_params, 0.3))
    assert [check.check for check in checks] == [
        "q_recursion_residual",
        "m_recursion_residual",
        "terminal_conditions",
    ]
    assert all(check.passed for check in checks)
