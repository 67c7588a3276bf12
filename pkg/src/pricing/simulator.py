"""
Monte Carlo simulation of the stochastic age process.

Each slot a user arrives with probability alpha, draws a private sampling cost
uniform on [0, b) and sends an update iff the cost does not exceed the posted
price; the age then resets to A0, otherwise it grows by one slot.

Replication i draws its uniforms from the substream
SeedSequence(seed, spawn_key=(i,)), so a replication's randomness depends only
on the root seed and its index. Replications run in fixed chunks whose
sums are reduced in chunk order, which keeps reports bit-identical for any
n_jobs.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from logger import get_logger
from pricing.model import ModelParams, check_price
from pricing.policies import AbstractPricingPolicy, expected_age_path

logger = get_logger(task_name="pricing.simulator")

SIM_MODES = ("closed_loop", "open_loop")
CHUNK_SIZE = 2048
MIN_REPLICATIONS_FOR_Z = 30
# differences below this count as exact when the sample has no spread
ZERO_SPREAD_TOLERANCE = 1e-9

SIMULATION_COLUMNS = [
    "mode",
    "policy",
    "t",
    "mean_age",
    "std_age",
    "mean_sq_age",
    "mean_price",
    "acceptance_rate",
    "acceptance_se",
]


@dataclass(frozen=True)
class SimConfig:
    """
    Attributes:
        policy (AbstractPricingPolicy): Pricing rule; must emit prices in [0, b].
        replications (int): Number of independent replications, >= 1.
        seed (int): Root seed, nonnegative.
        mode (str): "closed_loop" prices the realised age; "open_loop" posts the
            prices of the deterministic expected-age path.
        n_jobs (int, optional): joblib workers for the replication chunks.
    """

    policy: AbstractPricingPolicy
    replications: int = 10_000
    seed: int = 42
    mode: str = "closed_loop"
    n_jobs: Optional[int] = 1

    def __post_init__(self):
        if not isinstance(self.policy, AbstractPricingPolicy):
            raise ValueError(f"policy must be a pricing policy, got {self.policy!r}")
        if (
            isinstance(self.replications, bool)
            or int(self.replications) != self.replications
            or self.replications < 1
        ):
            raise ValueError(f"replications must be an integer >= 1, got {self.replications}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")
        if self.mode not in SIM_MODES:
            raise ValueError(f"mode must be one of {SIM_MODES}, got {self.mode}")


@dataclass(frozen=True)
class SimReport:
    """Per-slot empirical moments of one simulation run."""

    mode: str
    policy_name: str
    replications: int
    mean_age_path: np.ndarray
    std_age_path: np.ndarray
    mean_sq_age_path: np.ndarray
    mean_price_path: np.ndarray
    acceptance_rate_path: np.ndarray
    acceptance_se_path: np.ndarray
    mean_discounted_cost: float
    discounted_cost_se: float

    def to_dataframe(self) -> pd.DataFrame:
        slots = np.arange(len(self.mean_age_path))
        return pd.DataFrame(
            {
                "mode": self.mode,
                "policy": self.policy_name,
                "t": slots,
                "mean_age": self.mean_age_path,
                "std_age": self.std_age_path,
                "mean_sq_age": self.mean_sq_age_path,
                "mean_price": self.mean_price_path,
                "acceptance_rate": self.acceptance_rate_path,
                "acceptance_se": self.acceptance_se_path,
            },
            columns=SIMULATION_COLUMNS,
        )


@dataclass(frozen=True)
class ZScoreSummary:
    """Standardised gaps between a simulation and the expected-age recursion."""

    age_z: np.ndarray
    acceptance_z: np.ndarray
    analytic_age_path: np.ndarray
    analytic_acceptance_path: np.ndarray
    max_abs_z: float = field(init=False)
    max_abs_acceptance_z: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "max_abs_z", float(np.max(np.abs(self.age_z))))
        object.__setattr__(
            self, "max_abs_acceptance_z", float(np.max(np.abs(self.acceptance_z)))
        )


def replication_uniforms(seed: int, index: int, horizon: int) -> np.ndarray:
    """Arrival and cost uniforms of one replication, shape (2, T + 1)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return rng.random((2, horizon + 1))


def _simulate_chunk(
    params: ModelParams,
    policy: AbstractPricingPolicy,
    seed: int,
    start: int,
    stop: int,
    open_loop_prices: Optional[np.ndarray],
) -> Dict[str, np.ndarray]:
    horizon = params.horizon
    count = stop - start
    uniforms = np.stack(
        [replication_uniforms(seed, index, horizon) for index in range(start, stop)],
        axis=1,
    )
    arrivals, costs = uniforms[0], params.cost_max * uniforms[1]

    ages = np.full(count, params.initial_age)
    discounted = np.zeros(count)
    sums = {
        "age": np.zeros(horizon + 1),
        "age_sq": np.zeros(horizon + 1),
        "price": np.zeros(horizon + 1),
        "accepted": np.zeros(horizon + 1),
    }
    for t in range(horizon + 1):
        if open_loop_prices is None:
            prices = np.broadcast_to(np.asarray(policy.price(t, ages), dtype=float), (count,))
        else:
            prices = np.full(count, open_loop_prices[t])
        check_price(params, prices)

        accepted = (arrivals[:, t] < params.arrival_prob) & (costs[:, t] <= prices)
        sums["age"][t] = ages.sum()
        sums["age_sq"][t] = np.square(ages).sum()
        sums["price"][t] = prices.sum()
        sums["accepted"][t] = accepted.sum()

        discounted += params.discount**t * (np.square(ages) + prices * accepted)
        ages = np.where(accepted, params.reset_age, ages + 1.0)

    sums["cost"] = np.array([discounted.sum()])
    sums["cost_sq"] = np.array([np.square(discounted).sum()])
    return sums


def run(params: ModelParams, config: SimConfig) -> SimReport:
    """
    Simulates config.replications independent age paths over slots 0..T.

    The realised stage cost is A(t)^2 plus the price paid, p(t) when an update
    was accepted and 0 otherwise; its expectation is A^2 + (alpha / b) p^2.

    Returns:
        SimReport: Per-slot moments and the discounted-cost estimate.

    Raises:
        ValueError: If the policy posts a price outside [0, b].
    """
    open_loop_prices = None
    if config.mode == "open_loop":
        open_loop_prices = expected_age_path(params, config.policy, dynamics="true").price

    replications = int(config.replications)
    bounds = [
        (start, min(start + CHUNK_SIZE, replications))
        for start in range(0, replications, CHUNK_SIZE)
    ]
    logger.info(
        f"Simulating {replications} replications of {params.horizon + 1} slots "
        f"({config.mode}, policy={config.policy.name})"
    )
    chunks = Parallel(n_jobs=config.n_jobs)(
        delayed(_simulate_chunk)(
            params, config.policy, int(config.seed), start, stop, open_loop_prices
        )
        for start, stop in bounds
    )
    totals = {key: np.sum([chunk[key] for chunk in chunks], axis=0) for key in chunks[0]}

    n = float(replications)
    mean_age = totals["age"] / n
    mean_sq_age = totals["age_sq"] / n
    acceptance = totals["accepted"] / n
    mean_cost = float(totals["cost"][0] / n)
    if replications > 1:
        age_var = np.maximum(mean_sq_age - mean_age**2, 0.0) * n / (n - 1.0)
        cost_var = max(float(totals["cost_sq"][0] / n) - mean_cost**2, 0.0) * n / (n - 1.0)
    else:
        age_var = np.zeros_like(mean_age)
        cost_var = 0.0

    return SimReport(
        mode=config.mode,
        policy_name=config.policy.name,
        replications=replications,
        mean_age_path=mean_age,
        std_age_path=np.sqrt(age_var),
        mean_sq_age_path=mean_sq_age,
        mean_price_path=totals["price"] / n,
        acceptance_rate_path=acceptance,
        acceptance_se_path=np.sqrt(acceptance * (1.0 - acceptance) / n),
        mean_discounted_cost=mean_cost,
        discounted_cost_se=float(np.sqrt(cost_var / n)),
    )


def _z_scores(difference: np.ndarray, standard_error: np.ndarray) -> np.ndarray:
    spread = standard_error > 0.0
    z = np.where(np.abs(difference) <= ZERO_SPREAD_TOLERANCE, 0.0, np.inf)
    z[spread] = difference[spread] / standard_error[spread]
    return z


def compare_to_analytic(
    report: SimReport, params: ModelParams, policy: AbstractPricingPolicy
) -> ZScoreSummary:
    """
    Per-slot z-scores of the simulated mean age and acceptance rate against
    the expected-age recursion driven by the policy's open-loop prices.

    The recursion is the exact mean of an open-loop run or of any run whose
    prices do not depend on the age.

    Raises:
        ValueError: With fewer than 30 replications.
    """
    if report.replications < MIN_REPLICATIONS_FOR_Z:
        raise ValueError(
            f"z-scores need at least {MIN_REPLICATIONS_FOR_Z} replications, "
            f"got {report.replications}"
        )
    path = expected_age_path(params, policy, dynamics="true")
    n = float(report.replications)

    age_se = report.std_age_path / np.sqrt(n)
    age_z = _z_scores(report.mean_age_path - path.expected_age, age_se)

    expected_acceptance = params.arrival_prob * path.price / params.cost_max
    acceptance_se = np.sqrt(expected_acceptance * (1.0 - expected_acceptance) / n)
    acceptance_z = _z_scores(report.acceptance_rate_path - expected_acceptance, acceptance_se)

    return ZScoreSummary(
        age_z=age_z,
        acceptance_z=acceptance_z,
        analytic_age_path=np.asarray(path.expected_age),
        analytic_acceptance_path=expected_acceptance,
    )
