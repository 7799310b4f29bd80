"""Dataclasses to configure simulation runs and sweeps, with TOML file IO"""
import pathlib
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import toml

from src.switch.lib.traffic import CoflowModel

POLICIES = ("randomized", "periodic", "mwm", "cab")
POLICY_MODES = ("auto", "uniform", "bvn")
SWEEP_KINDS = ("n", "rho", "policy")


class _Validated:
    """Routes every attribute assignment through `validate_<name>` when it exists"""

    def __setattr__(self, prop, val):
        """
        Stores `val` under `prop`, normalised by its validator.

        A validator returning None keeps the value as given, so validators that
        only check can stay silent.

        Raises:
            ValueError: If a run, policy or traffic setting is out of range.
        """
        if validator := getattr(self, f"validate_{prop}", None):
            normalised = validator(val)
            object.__setattr__(self, prop, val if normalised is None else normalised)
        else:
            super().__setattr__(prop, val)


@dataclass
class PolicyConfig(_Validated):
    """
    PolicyConfig: scheduler selection and its parameters.

     Attributes:
         name (str): one of "randomized", "periodic", "mwm" or "cab".
         frame_size (Optional[int]): CAB frame length T; None tunes it from the traffic model.
         sctf (bool): CAB serves its batch shortest-clearance-time first.
         dynamic_frames (bool): CAB opens a new frame as soon as it runs out of work.
         mode (str): "uniform", "bvn" or "auto" for the randomized and periodic policies.
         period (int): cycle length of the periodic BvN schedule.
    """

    name: str = "cab"
    frame_size: Optional[int] = None
    sctf: bool = False
    dynamic_frames: bool = False
    mode: str = "auto"
    period: int = 1000

    def validate_name(self, value):
        if value not in POLICIES:
            raise ValueError(f"Invalid policy: {value!r}, expected one of {POLICIES}")

    def validate_frame_size(self, value):
        if value is None:
            return None
        if int(value) != value or value < 2:
            raise ValueError(f"frame_size must be an integer >= 2, got {value}")
        return int(value)

    def validate_mode(self, value):
        if value not in POLICY_MODES:
            raise ValueError(f"Invalid policy mode: {value!r}, expected one of {POLICY_MODES}")

    def validate_period(self, value):
        if int(value) != value or value < 1:
            raise ValueError(f"period must be a positive integer, got {value}")
        return int(value)


@dataclass
class MetricsConfig(_Validated):
    """
    MetricsConfig: what a run measures.

     Attributes:
         percentiles (List[float]): coflow delay quantiles in (0, 1).
         dilation (bool): report the coflow/packet delay dilation factor.
         stationary (bool): the run reports steady-state metrics, so it refuses rho >= 1.
         trace_samples (int): number of backlog samples after warmup.
    """

    percentiles: List[float] = field(default_factory=lambda: [0.999])
    dilation: bool = True
    stationary: bool = True
    trace_samples: int = 200

    def validate_percentiles(self, value):
        value = [float(q) for q in value]
        if any(not 0 < q < 1 for q in value):
            raise ValueError(f"percentiles must lie in (0, 1), got {value}")
        return value

    def validate_trace_samples(self, value):
        if int(value) != value or value < 10:
            raise ValueError(f"trace_samples must be an integer >= 10, got {value}")
        return int(value)


@dataclass
class SimConfig(_Validated):
    """
    SimConfig: one simulation run.

     Attributes:
         model (CoflowModel): traffic model, it also fixes the port count n.
         policy (PolicyConfig): scheduler.
         horizon_slots (int): number of simulated slots.
         warmup_slots (Optional[int]): slots ignored by the metrics, 10% of the horizon when None.
         seed (int): 64-bit seed of every random stream of the run.
         metrics (MetricsConfig): measurement options.
         debug (bool): check packet conservation after every slot.
    """

    model: CoflowModel
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    horizon_slots: int = 1_000_000
    warmup_slots: Optional[int] = None
    seed: int = 1
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    debug: bool = False

    def validate_horizon_slots(self, value):
        if int(value) != value or value < 1:
            raise ValueError(f"horizon_slots must be a positive integer, got {value}")
        return int(value)

    def validate_warmup_slots(self, value):
        if value is None:
            return self.horizon_slots // 10
        if int(value) != value or value < 0:
            raise ValueError(f"warmup_slots must be a non-negative integer, got {value}")
        if value >= self.horizon_slots:
            raise ValueError(f"warmup_slots ({value}) must be smaller than horizon_slots ({self.horizon_slots})")
        return int(value)

    def validate_seed(self, value):
        if int(value) != value or not 0 <= value < 2**64:
            raise ValueError(f"seed must be a 64-bit non-negative integer, got {value}")
        return int(value)

    @property
    def n(self) -> int:
        return self.model.n


@dataclass
class ExperimentPlan(_Validated):
    """
    ExperimentPlan: a sweep of simulation runs around a base configuration.

     Attributes:
         base (SimConfig): configuration every point starts from.
         kind (str): "n" sweeps port counts, "rho" offered loads, "policy" scheduler names.
         grid (List): values of the swept quantity.
         policies (List[str]): schedulers run at every grid point.
         replications (int): seeds per point, base.seed, base.seed + 1, ...
         output (Optional[str]): CSV file the rows are appended to.
         workers (int): concurrent worker processes.
    """

    base: SimConfig
    kind: str = "n"
    grid: List[Union[int, float, str]] = field(default_factory=list)
    policies: List[str] = field(default_factory=lambda: ["cab"])
    replications: int = 1
    output: Optional[str] = None
    workers: int = 1

    def validate_kind(self, value):
        if value not in SWEEP_KINDS:
            raise ValueError(f"Invalid sweep kind: {value!r}, expected one of {SWEEP_KINDS}")

    def validate_grid(self, value):
        if not value:
            raise ValueError("Sweep grid must not be empty")
        if self.kind == "n":
            if any(int(v) != v or v < 1 for v in value):
                raise ValueError(f"n grid must hold positive integers, got {value}")
            return [int(v) for v in value]
        if self.kind == "rho":
            if any(not 0 < float(v) for v in value):
                raise ValueError(f"rho grid must hold positive loads, got {value}")
            return [float(v) for v in value]
        if any(v not in POLICIES for v in value):
            raise ValueError(f"policy grid must hold policy names, got {value}")
        return list(value)

    def validate_policies(self, value):
        if not value or any(v not in POLICIES for v in value):
            raise ValueError(f"policies must be a non-empty list out of {POLICIES}, got {value}")
        return list(value)

    def validate_replications(self, value):
        if int(value) != value or value < 1:
            raise ValueError(f"replications must be >= 1, got {value}")
        return int(value)

    def validate_workers(self, value):
        if int(value) != value or value < 1:
            raise ValueError(f"workers must be >= 1, got {value}")
        return int(value)


def _drop_none(table: Dict[str, Any]) -> Dict[str, Any]:
    return {key: value for key, value in table.items() if value is not None}


def sim_config_from_dict(data: Dict[str, Any]) -> SimConfig:
    """
    Builds a SimConfig from the nested tables of a TOML document.

    Args:
        data (dict): Tables "traffic" (with "flow_size"), "policy", "metrics" and "run".

    Returns:
        SimConfig: the validated configuration.
    """
    traffic = dict(data.get("traffic", {}))
    flow_size = traffic.pop("flow_size", {})
    if "lambda" in traffic:
        traffic["lam"] = traffic.pop("lambda")
    model = CoflowModel(**traffic, **flow_size)
    run = data.get("run", {})
    return SimConfig(
        model=model,
        policy=PolicyConfig(**data.get("policy", {})),
        horizon_slots=run.get("horizon", 1_000_000),
        warmup_slots=run.get("warmup"),
        seed=run.get("seed", 1),
        metrics=MetricsConfig(**data.get("metrics", {})),
        debug=run.get("debug", False),
    )


def sim_config_to_dict(config: SimConfig) -> Dict[str, Any]:
    """Inverse of sim_config_from_dict; unset optional values are left out"""
    model = config.model
    traffic = _drop_none(
        {"n": model.n, "lambda": model.lam, "beta": model.beta, "placement": model.placement}
    )
    traffic["flow_size"] = _drop_none({"family": model.family, "epsilon": model.epsilon})
    if model.mean_matrix is not None:
        traffic["mean_matrix"] = model.mean_matrix.tolist()
    policy = config.policy
    return {
        "traffic": traffic,
        "policy": _drop_none(
            {
                "name": policy.name,
                "frame_size": policy.frame_size,
                "sctf": policy.sctf,
                "dynamic_frames": policy.dynamic_frames,
                "mode": policy.mode,
                "period": policy.period,
            }
        ),
        "metrics": {
            "percentiles": config.metrics.percentiles,
            "dilation": config.metrics.dilation,
            "stationary": config.metrics.stationary,
            "trace_samples": config.metrics.trace_samples,
        },
        "run": {
            "horizon": config.horizon_slots,
            "warmup": config.warmup_slots,
            "seed": config.seed,
            "debug": config.debug,
        },
    }


def load_sim_config(path: Union[str, pathlib.Path]) -> SimConfig:
    """Reads a SimConfig from a TOML file"""
    with open(path, "r", encoding="utf-8") as handle:
        return sim_config_from_dict(toml.load(handle))


def dump_sim_config(config: SimConfig, path: Union[str, pathlib.Path]) -> None:
    """Writes a SimConfig to a TOML file, creating parent folders"""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        toml.dump(sim_config_to_dict(config), handle)


def load_experiment_plan(path: Union[str, pathlib.Path]) -> ExperimentPlan:
    """Reads an ExperimentPlan: the SimConfig tables plus a [sweep] table"""
    with open(path, "r", encoding="utf-8") as handle:
        data = toml.load(handle)
    sweep = dict(data.get("sweep", {}))
    return ExperimentPlan(base=sim_config_from_dict(data), **sweep)
