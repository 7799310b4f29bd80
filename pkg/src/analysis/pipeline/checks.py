"""Oracle checks: simulated queues against the slotted M/G/1, GI/GI/1 and CAB delay formulas"""
import pathlib
import sys
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

sys.path.append(pathlib.Path.cwd().as_posix())
from src.analysis.lib.oracle import (  # pylint: disable=wrong-import-position
    gi_g1_wait,
    periodic_voq_wait,
    simulate_bernoulli_fifo,
)
from src.engine.lib.config import (  # pylint: disable=wrong-import-position
    MetricsConfig,
    PolicyConfig,
    SimConfig,
)
from src.engine.pipeline.simulate import Simulator  # pylint: disable=wrong-import-position
from src.switch.lib.traffic import CoflowModel  # pylint: disable=wrong-import-position
from src.tuning.lib.params import cab_delay_bound  # pylint: disable=wrong-import-position

MG1_TOLERANCE = 0.05
GG1_TOLERANCE = 0.03


@dataclass
class OracleComparison:
    """A measured quantity next to its analytic counterpart"""

    name: str
    measured: Optional[float]
    predicted: float
    tolerance: Optional[float] = None

    @property
    def relative_error(self) -> Optional[float]:
        if self.measured is None or self.predicted == 0:
            return None
        return abs(self.measured - self.predicted) / abs(self.predicted)

    @property
    def passed(self) -> bool:
        """Within tolerance, or for a bound (no tolerance) measured at or below it"""
        if self.measured is None:
            return False
        if self.tolerance is None:
            return self.measured <= self.predicted
        return self.relative_error <= self.tolerance


def mg1_check(
    n: int = 8,
    lam: float = 0.3,
    beta: float = 2.5,
    horizon: int = 1_000_000,
    seed: int = 1,
    progress: bool = False,
) -> OracleComparison:
    """
    Per-VOQ first-service wait under round-robin periodic service against the slotted M/G/1 formula.

    Each VOQ is visited once every n slots, so a batch of X packets is a
    customer with service time U = n X: E[U] = beta and E[U^2] = n sigma^2 + beta^2
    where sigma^2 is the port load variance. A batch also waits for the next
    visit of its VOQ, which adds (n - 1) / 2 slots.
    """
    model = CoflowModel(n=n, lam=lam, beta=beta)
    config = SimConfig(
        model=model,
        policy=PolicyConfig(name="periodic", mode="uniform"),
        horizon_slots=horizon,
        seed=seed,
        metrics=MetricsConfig(dilation=False),
    )
    record = Simulator(config, progress=progress).run()
    e_u2 = n * model.port_load_variance() + beta**2
    predicted = periodic_voq_wait(lam, beta, e_u2, n)
    return OracleComparison("mg1_voq_wait", record.mean_voq_wait, predicted, MG1_TOLERANCE)


def gg1_check(delta: float = 0.1, service: int = 3, customers: int = 200_000, seed: int = 1) -> OracleComparison:
    """Bernoulli-arrival FIFO with deterministic service against the GI/GI/1 delay formula"""
    rng = np.random.Generator(np.random.Philox(seed))
    measured = simulate_bernoulli_fifo(delta, lambda _: service, customers, rng)
    predicted = gi_g1_wait(delta, service, service**2)
    return OracleComparison("gg1_fifo_delay", measured, predicted, GG1_TOLERANCE)


def cab_bound_check(
    n: int = 16,
    lam: float = 0.3,
    beta: float = 2.5,
    horizon: int = 200_000,
    seed: int = 1,
    progress: bool = False,
) -> OracleComparison:
    """Measured CAB mean coflow delay against the analytic bound of its tuned parameters"""
    model = CoflowModel(n=n, lam=lam, beta=beta)
    config = SimConfig(model=model, policy=PolicyConfig(name="cab"), horizon_slots=horizon, seed=seed)
    simulator = Simulator(config, progress=progress)
    record = simulator.run()
    bound = cab_delay_bound(simulator.params, n, lam, beta, model.port_load_variance())
    return OracleComparison("cab_delay_bound", record.mean_coflow_delay, bound)


def oracle_check(
    horizon: int = 1_000_000,
    seed: int = 1,
    customers: int = 200_000,
    progress: bool = False,
) -> List[OracleComparison]:
    """Runs every oracle comparison with its reference parameters"""
    return [
        mg1_check(horizon=horizon, seed=seed, progress=progress),
        gg1_check(customers=customers, seed=seed),
        cab_bound_check(horizon=max(horizon // 5, 1000), seed=seed, progress=progress),
    ]
