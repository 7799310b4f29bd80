"""Coflow traffic model: flow size laws, coflow demand matrices and arrival sampling"""
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

import numpy as np
from scipy import special

PLACEMENTS = ("uniform", "diagonal")
FAMILIES = ("geometric", "deterministic", "powerlaw", "zero")


@dataclass(frozen=True)
class Zero:
    """Every flow is empty"""

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def variance(self) -> float:
        return 0.0

    @property
    def mgf_domain(self) -> float:
        return math.inf

    def mgf(self, s: float) -> float:
        return 1.0

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.zeros(size, dtype=np.int64)


@dataclass(frozen=True)
class Deterministic:
    """Every flow carries exactly `value` packets"""

    value: int

    def __post_init__(self):
        if int(self.value) != self.value or self.value < 0:
            raise ValueError(f"Deterministic flow size must be a non-negative integer, got {self.value}")

    @property
    def mean(self) -> float:
        return float(self.value)

    @property
    def variance(self) -> float:
        return 0.0

    @property
    def mgf_domain(self) -> float:
        return math.inf

    def mgf(self, s: float) -> float:
        return math.exp(s * self.value)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.full(size, int(self.value), dtype=np.int64)


@dataclass(frozen=True)
class Geometric:
    """
    Geometric flow size on {0, 1, 2, ...} with the given mean.

    P[X = k] = (1 - p) p^k with p = mean / (mean + 1).
    """

    mean_size: float

    def __post_init__(self):
        if self.mean_size <= 0:
            raise ValueError(f"Geometric mean must be positive, got {self.mean_size}")

    @property
    def p(self) -> float:
        return self.mean_size / (self.mean_size + 1.0)

    @property
    def mean(self) -> float:
        return float(self.mean_size)

    @property
    def variance(self) -> float:
        return self.mean_size * (1.0 + self.mean_size)

    @property
    def mgf_domain(self) -> float:
        # E[e^{sX}] is finite for e^s < 1/p
        return -math.log(self.p)

    def mgf(self, s: float) -> float:
        if s >= self.mgf_domain:
            return math.inf
        return (1.0 - self.p) / (1.0 - self.p * math.exp(s))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        # numpy's geometric counts trials to first success, support {1, 2, ...}
        return rng.geometric(1.0 - self.p, size=size).astype(np.int64) - 1


@dataclass(frozen=True)
class PowerLaw:
    """
    Heavy-tailed flow size with P[X >= k] = k^-(1 + epsilon) for k >= 1.

    Sampled as floor(U^(-1 / (1 + epsilon))) for U uniform on (0, 1].
    """

    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"PowerLaw epsilon must be positive, got {self.epsilon}")

    @property
    def mean(self) -> float:
        return float(special.zeta(1.0 + self.epsilon))

    @property
    def variance(self) -> float:
        if self.epsilon <= 1.0:
            return math.inf
        second = 2.0 * special.zeta(self.epsilon) - special.zeta(1.0 + self.epsilon)
        return float(second - self.mean**2)

    @property
    def mgf_domain(self) -> float:
        return 0.0

    def mgf(self, s: float) -> float:
        return 1.0 if s == 0 else math.inf

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        uniform = 1.0 - rng.random(size)
        return np.floor(uniform ** (-1.0 / (1.0 + self.epsilon))).astype(np.int64)


def sample_flow_size(dist, rng: np.random.Generator) -> int:
    """
    Draws one flow size from `dist`.

    Args:
        dist: One of Zero, Deterministic, Geometric or PowerLaw.
        rng (np.random.Generator): Source of randomness.

    Returns:
        int: A non-negative packet count.
    """
    return int(dist.sample(rng, 1)[0])


@dataclass
class CoflowModel:
    """
    CoflowModel: A dataclass describing the stochastic coflow arrival process.

     Attributes:
         n (int): number of switch ports.
         lam (float): coflow arrival rate per slot (Poisson).
         beta (float): target mean packets per port per coflow.
         placement (str): "uniform" puts a flow on every (i, j), "diagonal" on (i, i) only.
         family (str): flow size law, one of "geometric", "deterministic", "powerlaw" or "zero".
         epsilon (Optional[float]): tail exponent of the power law.
         mean_matrix (Optional[np.ndarray]): per-entry geometric means for non-uniform traffic.
    """

    n: int
    lam: float
    beta: float = 1.0
    placement: str = "uniform"
    family: str = "geometric"
    epsilon: Optional[float] = None
    mean_matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def __setattr__(self, prop, val):
        if validator := getattr(self, f"validate_{prop}", None):
            normalised = validator(val)
            object.__setattr__(self, prop, val if normalised is None else normalised)
        else:
            super().__setattr__(prop, val)

    def validate_n(self, value):
        if int(value) != value or value < 1:
            raise ValueError(f"n must be a positive integer, got {value}")
        return int(value)

    def validate_lam(self, value):
        if value < 0 or not math.isfinite(value):
            raise ValueError(f"lam must be a finite non-negative rate, got {value}")
        return float(value)

    def validate_beta(self, value):
        if value < 0 or not math.isfinite(value):
            raise ValueError(f"beta must be non-negative, got {value}")
        return float(value)

    def validate_placement(self, value):
        if value not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}, got {value!r}")

    def validate_family(self, value):
        if value not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {value!r}")
        if value == "deterministic":
            per_entry = self.beta / self.n if self.placement == "uniform" else self.beta
            if per_entry != int(per_entry):
                raise ValueError("deterministic traffic needs an integer packet count per flow")

    def validate_epsilon(self, value):
        if self.family == "powerlaw":
            if value is None or value <= 0:
                raise ValueError("powerlaw family needs a positive epsilon")
            return float(value)
        return value

    def validate_mean_matrix(self, value):
        if value is None:
            return None
        value = np.asarray(value, dtype=float)
        if value.shape != (self.n, self.n) or (value < 0).any():
            raise ValueError(f"mean_matrix must be a non-negative {self.n}x{self.n} matrix")
        if self.family != "geometric":
            raise ValueError("mean_matrix is only supported for the geometric family")
        return value

    def entry_distribution(self, i: int, j: int):
        """Flow size law of entry (i, j), or Zero where the placement puts no flow"""
        if self.placement == "diagonal" and i != j:
            return Zero()
        if self.family == "zero":
            return Zero()
        if self.family == "powerlaw":
            return PowerLaw(self.epsilon)
        if self.mean_matrix is not None:
            mean = self.mean_matrix[i, j]
            return Geometric(mean) if mean > 0 else Zero()
        per_entry = self.beta if self.placement == "diagonal" else self.beta / self.n
        if self.family == "deterministic":
            return Deterministic(int(round(per_entry)))
        return Geometric(per_entry) if per_entry > 0 else Zero()

    def expected_demand(self) -> np.ndarray:
        """Matrix of per-entry mean packet counts"""
        if self.mean_matrix is not None:
            return self.mean_matrix.copy()
        mean = self.entry_distribution(0, 0).mean
        if self.placement == "diagonal":
            return np.diag(np.full(self.n, mean))
        return np.full((self.n, self.n), mean)

    def rate_matrix(self) -> np.ndarray:
        """Per-VOQ packet arrival rate lam * E[X_ij]"""
        return self.lam * self.expected_demand()

    @property
    def port_mean(self) -> float:
        """Mean packets per coflow at the busiest port"""
        means = self.expected_demand()
        return float(max(means.sum(axis=1).max(), means.sum(axis=0).max()))

    @property
    def rho(self) -> float:
        return self.lam * self.port_mean

    def port_load_variance(self) -> float:
        """Variance of the busiest row's packet count per coflow"""
        if self.mean_matrix is not None:
            row = self.mean_matrix[int(np.argmax(self.mean_matrix.sum(axis=1)))]
            return float((row * (1.0 + row)).sum())
        variance = self.entry_distribution(0, 0).variance
        return float(variance if self.placement == "diagonal" else self.n * variance)


@dataclass(eq=False)
class Coflow:
    """One coflow in flight: its demand, what is left of it and when it finished"""

    id: int
    arrival_slot: int
    demand: np.ndarray
    remaining: np.ndarray = field(init=False, repr=False)
    remaining_total: int = field(init=False)
    clearance: int = field(init=False)
    completion_slot: Optional[int] = None
    conforming: Optional[bool] = None

    def __post_init__(self):
        self.demand = as_traffic_matrix(self.demand)
        self.remaining = self.demand.copy()
        self.remaining_total = int(self.demand.sum())
        self.clearance = clearance_time(self.demand)

    @property
    def n(self) -> int:
        return self.demand.shape[0]

    @property
    def is_complete(self) -> bool:
        return self.remaining_total == 0


def as_traffic_matrix(x, n: Optional[int] = None) -> np.ndarray:
    """
    Validates and converts `x` into an integer traffic matrix.

    Raises:
        ValueError: If `x` is not square, has negative entries or does not match `n`.
    """
    matrix = np.asarray(x)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Traffic matrix must be square, got shape {matrix.shape}")
    if n is not None and matrix.shape[0] != n:
        raise ValueError(f"Traffic matrix must be {n}x{n}, got {matrix.shape}")
    if not np.all(np.equal(np.mod(matrix, 1), 0)):
        raise ValueError("Traffic matrix entries must be integers")
    matrix = matrix.astype(np.int64)
    if (matrix < 0).any():
        raise ValueError("Traffic matrix entries must be non-negative")
    return matrix


def clearance_time(x) -> int:
    """
    Minimum number of slots needed to clear `x`: the largest row or column sum.

    Args:
        x: Square non-negative integer matrix.

    Returns:
        int: max over ports of the packets the port must send or receive.
    """
    x = np.asarray(x)
    if x.size == 0:
        return 0
    return int(max(x.sum(axis=1).max(), x.sum(axis=0).max()))


def aggregate(coflows: Iterable, n: Optional[int] = None) -> np.ndarray:
    """
    Element-wise sum of coflow demands.

    Args:
        coflows: Coflow objects or raw demand matrices.
        n (Optional[int]): Port count, required when `coflows` is empty.

    Returns:
        np.ndarray: The aggregate traffic matrix.

    Raises:
        ValueError: If dimensions disagree, or the list is empty and n is not given.
    """
    total = None if n is None else np.zeros((n, n), dtype=np.int64)
    for item in coflows:
        demand = item.demand if isinstance(item, Coflow) else as_traffic_matrix(item)
        if total is None:
            total = np.zeros_like(demand)
        if demand.shape != total.shape:
            raise ValueError(f"Coflow of shape {demand.shape} does not fit aggregate {total.shape}")
        total = total + demand
    if total is None:
        raise ValueError("Cannot aggregate an empty coflow list without n")
    return total


def sample_demand(model: CoflowModel, rng: np.random.Generator) -> np.ndarray:
    """Draws one coflow demand matrix from the model"""
    n = model.n
    if model.mean_matrix is not None:
        means = model.mean_matrix
        p = means / (means + 1.0)
        return rng.geometric(1.0 - p).astype(np.int64) - 1
    if model.placement == "diagonal":
        demand = np.zeros((n, n), dtype=np.int64)
        demand[np.diag_indices(n)] = model.entry_distribution(0, 0).sample(rng, n)
        return demand
    return model.entry_distribution(0, 0).sample(rng, (n, n))


def sample_arrivals(
    model: CoflowModel,
    slot: int,
    rng: np.random.Generator,
    next_id: int = 0,
    size_rng: Optional[np.random.Generator] = None,
) -> List[Coflow]:
    """
    Samples the coflows arriving in one slot.

    Args:
        model (CoflowModel): Arrival process description.
        slot (int): Current slot index, stamped as the arrival slot.
        rng (np.random.Generator): Stream for the Poisson arrival count.
        next_id (int): First id handed out in this slot.
        size_rng (Optional[np.random.Generator]): Stream for flow sizes, defaults to `rng`.

    Returns:
        List[Coflow]: Arrivals with consecutive ids starting at `next_id`.
    """
    size_rng = rng if size_rng is None else size_rng
    count = int(rng.poisson(model.lam)) if model.lam > 0 else 0
    return [
        Coflow(id=next_id + k, arrival_slot=slot, demand=sample_demand(model, size_rng))
        for k in range(count)
    ]


def sample_frame_aggregates(
    model: CoflowModel, frame_size: int, frames: int, rng: np.random.Generator, chunk: int = 256
) -> np.ndarray:
    """
    Clearance times of the aggregate arrivals of `frames` independent frames.

    Geometric entries use the fact that a sum of k geometric flows is negative
    binomial, so a frame costs one draw per entry whatever its coflow count.

    Returns:
        np.ndarray: One clearance time per frame.
    """
    taus = np.empty(frames, dtype=np.int64)
    geometric = model.family == "geometric" and model.mean_matrix is None
    per_entry = model.beta if model.placement == "diagonal" else model.beta / model.n
    for start in range(0, frames, chunk):
        stop = min(frames, start + chunk)
        counts = rng.poisson(model.lam * frame_size, size=stop - start)
        if geometric and per_entry > 0:
            success = 1.0 / (per_entry + 1.0)
            shape = (model.n,) if model.placement == "diagonal" else (model.n, model.n)
            # negative_binomial rejects zero trials, empty frames are masked afterwards
            trials = np.maximum(counts, 1).reshape((-1,) + (1,) * len(shape))
            draws = rng.negative_binomial(trials, success, size=(stop - start,) + shape)
            draws[counts == 0] = 0
            if model.placement == "diagonal":
                taus[start:stop] = draws.max(axis=1)
            else:
                taus[start:stop] = np.maximum(draws.sum(axis=2).max(axis=1), draws.sum(axis=1).max(axis=1))
        else:
            for k, count in enumerate(counts):
                total = np.zeros((model.n, model.n), dtype=np.int64)
                for _ in range(count):
                    total += sample_demand(model, rng)
                taus[start + k] = clearance_time(total)
    return taus
