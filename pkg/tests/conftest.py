import os
import sys
import tempfile

import pytest

# outputs of code paths that fall back to the default locations stay out of the repo
os.environ.setdefault(
    "PRICING_INPUTS_OUTPUTS_PATH", tempfile.mkdtemp(prefix="pricing-tests-")
)
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(__file__)), "src"))

from pricing.model import ModelParams  # noqa: E402


@pytest.fixture
def reference_params() -> ModelParams:
    """The reference regime used throughout: alpha=0.5, b=1, rho=0.9, A0=0.1, A(0)=2."""
    return ModelParams(
        arrival_prob=0.5,
        cost_max=1.0,
        discount=0.9,
        reset_age=0.1,
        initial_age=2.0,
        horizon=100,
    )


@pytest.fixture
def small_overrides(tmp_path) -> dict:
    """Run-config overrides that keep the end-to-end commands fast."""
    return {
        "horizon": 30,
        "oracle_horizon": 3,
        "price_step": 0.002,
        "age_step": 0.02,
        "replications": 500,
        "verify_replications": 2000,
        "gap_horizons": [10, 40],
        "output_dir": str(tmp_path / "outputs"),
    }
