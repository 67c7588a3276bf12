import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

from config import paths
from pricing.model import ModelParams
from pricing.oracle import MAX_ORACLE_HORIZON, GridSpec, default_grid
from pricing.policies import PRICING_POLICIES
from pricing.simulator import MIN_REPLICATIONS_FOR_Z, SIM_MODES
from pricing.steady_state import DELTA_MODES
from utils import read_json_as_dict, save_json

# "both" runs every simulation mode, each labelled in the outputs
SIM_MODE_CHOICES = SIM_MODES + ("both",)


def _is_int(value: Any) -> bool:
    return not isinstance(value, bool) and isinstance(value, (int, float)) and int(value) == value


@dataclass(frozen=True)
class RunConfig:
    """
    Flat run configuration shared by every command.

    Model fields are checked by ModelParams; the remaining fields are checked
    here, so an invalid file fails before any computation starts.
    """

    arrival_prob: float
    cost_max: float
    discount: float
    reset_age: float
    initial_age: float
    horizon: int
    tolerance: float
    max_iter: int
    initial_delta: float
    clip_prices: bool
    replications: int
    seed: int
    policy: str
    constant_price: float
    sim_mode: str
    price_step: float
    age_step: float
    oracle_horizon: int
    verify_replications: int
    gap_horizons: List[int]
    gap_delta_mode: str
    n_jobs: int
    output_dir: str = field(default=paths.OUTPUT_DIR)

    def __post_init__(self):
        params = self.model_params()
        if not self.tolerance > 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if not _is_int(self.max_iter) or self.max_iter < 1:
            raise ValueError(f"max_iter must be an integer >= 1, got {self.max_iter}")
        if not self.initial_delta >= 0.0:
            raise ValueError(f"initial_delta must be nonnegative, got {self.initial_delta}")
        if not isinstance(self.clip_prices, bool):
            raise ValueError(f"clip_prices must be true or false, got {self.clip_prices}")
        if not _is_int(self.replications) or self.replications < 1:
            raise ValueError(f"replications must be an integer >= 1, got {self.replications}")
        if not _is_int(self.seed) or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")
        if self.policy not in PRICING_POLICIES:
            raise ValueError(
                f"policy must be one of {sorted(PRICING_POLICIES)}, got {self.policy}"
            )
        if not 0.0 <= self.constant_price <= params.cost_max:
            raise ValueError(
                f"constant_price must lie in [0, {params.cost_max}], got {self.constant_price}"
            )
        if self.sim_mode not in SIM_MODE_CHOICES:
            raise ValueError(f"sim_mode must be one of {SIM_MODE_CHOICES}, got {self.sim_mode}")
        if not self.price_step > 0.0 or not self.age_step > 0.0:
            raise ValueError(
                f"price_step and age_step must be positive, got "
                f"{self.price_step} and {self.age_step}"
            )
        if not _is_int(self.oracle_horizon) or not 1 <= self.oracle_horizon <= MAX_ORACLE_HORIZON:
            raise ValueError(
                f"oracle_horizon must be an integer in 1..{MAX_ORACLE_HORIZON}, "
                f"got {self.oracle_horizon}"
            )
        if not _is_int(self.verify_replications) or self.verify_replications < MIN_REPLICATIONS_FOR_Z:
            raise ValueError(
                f"verify_replications must be an integer >= {MIN_REPLICATIONS_FOR_Z}, "
                f"got {self.verify_replications}"
            )
        if not self.gap_horizons or not all(
            _is_int(horizon) and horizon >= 1 for horizon in self.gap_horizons
        ):
            raise ValueError(
                f"gap_horizons must be a nonempty list of integers >= 1, got {self.gap_horizons}"
            )
        if self.gap_delta_mode not in DELTA_MODES:
            raise ValueError(
                f"gap_delta_mode must be one of {DELTA_MODES}, got {self.gap_delta_mode}"
            )
        if not _is_int(self.n_jobs) or self.n_jobs == 0:
            raise ValueError(f"n_jobs must be a nonzero integer, got {self.n_jobs}")

    def model_params(self, horizon: Optional[int] = None) -> ModelParams:
        return ModelParams(
            arrival_prob=self.arrival_prob,
            cost_max=self.cost_max,
            discount=self.discount,
            reset_age=self.reset_age,
            initial_age=self.initial_age,
            horizon=self.horizon if horizon is None else horizon,
        )

    def grid_spec(self, params: ModelParams, **overrides) -> GridSpec:
        """Oracle grid over the reachable ages of params at the configured steps."""
        settings = dict(price_step=self.price_step, age_step=self.age_step)
        settings.update(overrides)
        return default_grid(params, **settings)

    def provenance(self) -> Dict[str, Any]:
        return asdict(self)

    def sim_modes(self) -> List[str]:
        return list(SIM_MODES) if self.sim_mode == "both" else [self.sim_mode]

    def output_path(self, file_name: str) -> str:
        return os.path.join(self.output_dir, file_name)

    def prepare_output_dir(self) -> None:
        """Creates the output directory and records the resolved configuration in it."""
        os.makedirs(self.output_dir, exist_ok=True)
        save_json(self.output_path(paths.RESOLVED_CONFIG_FILE_NAME), self.provenance())


CONFIG_KEYS = [item.name for item in fields(RunConfig)]


def load_run_config(
    config_file_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    default_config_file_path: str = paths.DEFAULT_RUN_CONFIG_FILE_PATH,
) -> RunConfig:
    """
    Resolves the run configuration: defaults, then the given JSON file (or the
    run_config.json in the inputs directory when present), then overrides
    whose value is not None.

    Args:
        config_file_path (str, optional): Path of a JSON run config.
        overrides (dict, optional): Command-line values keyed by config key.
        default_config_file_path (str): Path of the defaults.

    Returns:
        RunConfig: The validated configuration.

    Raises:
        ValueError: On unknown keys or invalid values.
        FileNotFoundError: If config_file_path does not exist.
    """
    resolved = read_json_as_dict(default_config_file_path)
    if config_file_path is None and os.path.isfile(paths.USER_RUN_CONFIG_FILE_PATH):
        config_file_path = paths.USER_RUN_CONFIG_FILE_PATH

    layers = []
    if config_file_path is not None:
        layers.append((config_file_path, read_json_as_dict(config_file_path)))
    if overrides:
        layers.append(
            ("command line", {key: value for key, value in overrides.items() if value is not None})
        )
    for source, layer in layers:
        unknown = sorted(set(layer) - set(CONFIG_KEYS))
        if unknown:
            raise ValueError(f"Unknown config keys in {source}: {unknown}")
        resolved.update(layer)

    missing = sorted(set(CONFIG_KEYS) - set(resolved) - {"output_dir"})
    if missing:
        raise ValueError(f"Missing config keys: {missing}")
    return RunConfig(**resolved)
