"""Moment generating function of the per-port coflow load B = sum_j X_ij"""
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.switch.lib.traffic import CoflowModel, Geometric


@dataclass
class PortLoadMgf:
    """
    M_B(s) = E[exp(s B)] together with the edge of its domain.

     Attributes:
         fn (Callable[[float], float]): the MGF, defined on [0, domain_sup).
         domain_sup (float): supremum of the s where M_B is finite.
         mean (float): E[B] = M_B'(0).
         second_moment (float): E[B^2] = M_B''(0).
         source (str): "closed-form" or "monte-carlo".
    """

    fn: Callable[[float], float]
    domain_sup: float
    mean: float
    second_moment: float
    source: str = "closed-form"

    def __call__(self, s: float) -> float:
        return self.fn(s)

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    @classmethod
    def deterministic(cls, beta: float) -> "PortLoadMgf":
        """B = beta with probability one"""
        return cls(lambda s: math.exp(beta * s), math.inf, float(beta), float(beta) ** 2)

    @classmethod
    def geometric_sum(cls, terms: int, mean: float) -> "PortLoadMgf":
        """B is the sum of `terms` i.i.d. geometric flows with the given mean each"""
        entry = Geometric(mean)
        variance = terms * entry.variance
        total_mean = terms * mean
        return cls(
            lambda s: entry.mgf(s) ** terms,
            entry.mgf_domain,
            total_mean,
            variance + total_mean**2,
        )


def port_load_mgf(model: CoflowModel) -> Optional[PortLoadMgf]:
    """
    Closed-form MGF of the busiest port's load, or None when the model has none.

    Args:
        model (CoflowModel): Traffic description.

    Returns:
        Optional[PortLoadMgf]: None for power-law traffic and non-uniform mean matrices.
    """
    if model.mean_matrix is not None or model.family == "powerlaw":
        return None
    if model.family == "zero":
        return PortLoadMgf.deterministic(0.0)
    if model.family == "deterministic":
        return PortLoadMgf.deterministic(model.port_mean)
    if model.placement == "diagonal":
        return PortLoadMgf.geometric_sum(1, model.beta)
    return PortLoadMgf.geometric_sum(model.n, model.beta / model.n)


def sample_port_loads(model: CoflowModel, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Samples of B, the packet count one coflow puts on the busiest input"""
    if model.mean_matrix is not None:
        row = model.mean_matrix[int(np.argmax(model.mean_matrix.sum(axis=1)))]
        p = row / (row + 1.0)
        return (rng.geometric(1.0 - p, size=(samples, row.size)) - 1).sum(axis=1)
    if model.placement == "diagonal":
        return model.entry_distribution(0, 0).sample(rng, samples)
    return model.entry_distribution(0, 0).sample(rng, (samples, model.n)).sum(axis=1)


def empirical_mgf(
    model: CoflowModel,
    rng: np.random.Generator,
    samples: int = 1_000_000,
    max_rse: float = 0.05,
    s_max: float = 5.0,
) -> PortLoadMgf:
    """
    Monte Carlo estimate of M_B.

    The domain is cut where the estimate's relative standard error first
    exceeds `max_rse`.

    Args:
        model (CoflowModel): Traffic description.
        rng (np.random.Generator): Sampling stream.
        samples (int): Number of sampled port loads.
        max_rse (float): Largest tolerated relative standard error.
        s_max (float): Upper end of the scanned s range.

    Returns:
        PortLoadMgf: Estimator with source "monte-carlo".
    """
    loads = sample_port_loads(model, samples, rng)
    values, counts = np.unique(loads, return_counts=True)
    weights = counts / samples
    values = values.astype(float)

    def estimate(s: float) -> float:
        return float(np.dot(weights, np.exp(s * values)))

    domain_sup = s_max
    for s in np.linspace(0.0, s_max, 501)[1:]:
        first = np.dot(weights, np.exp(s * values))
        second = np.dot(weights, np.exp(2.0 * s * values))
        rse = math.sqrt(max(second - first**2, 0.0) / samples) / first
        if not math.isfinite(rse) or rse > max_rse:
            domain_sup = float(s)
            break
    return PortLoadMgf(
        estimate,
        domain_sup,
        float(np.dot(weights, values)),
        float(np.dot(weights, values**2)),
        source="monte-carlo",
    )


def model_mgf(model: CoflowModel, rng: np.random.Generator, samples: int = 1_000_000) -> PortLoadMgf:
    """Closed form when available, Monte Carlo estimate otherwise"""
    closed = port_load_mgf(model)
    return closed if closed is not None else empirical_mgf(model, rng, samples)
