"""Monte Carlo clearance time scaling studies and the regression fits shared with trend reports"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from src.switch.lib.traffic import CoflowModel

FAMILIES = ("deterministic", "diagonal-geometric", "diagonal-powerlaw", "uniform-geometric")
FIT_KINDS = ("log-linear", "log-log")
MIN_SAMPLES = 1000
MIN_GRID_POINTS = 3
# entries drawn per chunk of uniform matrices
CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class ScalingFit:
    """
    Ordinary least squares fit of a scaling law.

     Attributes:
         kind (str): "log-linear" regresses values on log N, "log-log" regresses log values on log N.
         slope (float): fitted slope.
         intercept (float): fitted intercept.
         r_squared (float): coefficient of determination.
         slope_stderr (float): standard error of the slope from the residual variance.
         theory (Optional[float]): slope predicted by the traffic law, when one is known.
    """

    kind: str
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float
    theory: Optional[float] = None


@dataclass(frozen=True)
class ScalingEstimate:
    """Mean clearance time per port count, with standard errors and the fitted scaling law"""

    family: str
    grid: List[int]
    means: List[float]
    std_errors: List[float]
    fit: ScalingFit

    @property
    def is_constant(self) -> bool:
        """Slope indistinguishable from zero within two standard errors"""
        return abs(self.fit.slope) <= 2.0 * self.fit.slope_stderr


def fit_scaling(
    grid: Sequence[float], values: Sequence[float], kind: str, theory: Optional[float] = None
) -> ScalingFit:
    """
    Fits `values` against log(`grid`).

    Args:
        grid: Port counts (or any positive abscissa).
        values: Measured quantity per grid point.
        kind: "log-linear" or "log-log".
        theory: Expected slope, echoed in the result.

    Raises:
        ValueError: On an unknown kind, fewer than 3 points, mismatched lengths
            or non-positive values where logs are taken.
    """
    if kind not in FIT_KINDS:
        raise ValueError(f"Invalid fit kind: {kind}, expected one of {FIT_KINDS}")
    x = np.asarray(grid, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"grid and values differ in length: {x.size} != {y.size}")
    if x.size < MIN_GRID_POINTS:
        raise ValueError(f"A scaling fit needs at least {MIN_GRID_POINTS} points, got {x.size}")
    if (x <= 0).any():
        raise ValueError("grid must be positive")
    if kind == "log-log":
        if (y <= 0).any():
            raise ValueError("log-log fit needs positive values")
        y = np.log(y)
    result = stats.linregress(np.log(x), y)
    return ScalingFit(
        kind=kind,
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_squared=float(result.rvalue**2),
        slope_stderr=float(result.stderr),
        theory=theory,
    )


def _family_model(family: str, n: int, beta: float, epsilon: float) -> CoflowModel:
    if family == "deterministic":
        return CoflowModel(n=n, lam=0.0, beta=max(1, round(beta)), placement="diagonal", family="deterministic")
    if family == "diagonal-geometric":
        return CoflowModel(n=n, lam=0.0, beta=beta, placement="diagonal")
    if family == "diagonal-powerlaw":
        return CoflowModel(n=n, lam=0.0, placement="diagonal", family="powerlaw", epsilon=epsilon)
    return CoflowModel(n=n, lam=0.0, beta=beta)


def sample_clearance_times(model: CoflowModel, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Clearance times of `samples` independent coflows drawn from `model`"""
    dist = model.entry_distribution(0, 0)
    n = model.n
    if model.placement == "diagonal":
        # a diagonal matrix clears in its largest entry
        return dist.sample(rng, (samples, n)).max(axis=1)
    taus = np.empty(samples, dtype=np.int64)
    chunk = max(1, CHUNK_ENTRIES // (n * n))
    for start in range(0, samples, chunk):
        stop = min(samples, start + chunk)
        draws = dist.sample(rng, (stop - start, n, n))
        taus[start:stop] = np.maximum(draws.sum(axis=2).max(axis=1), draws.sum(axis=1).max(axis=1))
    return taus


def clearance_scaling(
    family: str,
    n_grid: Sequence[int],
    samples_per_n: int,
    rng: np.random.Generator,
    beta: float = 2.5,
    epsilon: float = 1.0,
) -> ScalingEstimate:
    """
    Estimates E[tau] across port counts and fits the growth law of the family.

    Families and fits:
        deterministic: diagonal constant entries, log-linear fit with theory slope 0.
        diagonal-geometric: geometric diagonal with mean `beta`, log-linear fit.
        diagonal-powerlaw: P[X >= k] = k^-(1 + epsilon) on the diagonal, log-log fit
            with theory slope 1 / (1 + epsilon).
        uniform-geometric: geometric entries of mean beta / N everywhere, log-linear fit.

    Args:
        family: One of FAMILIES.
        n_grid: At least 3 port counts.
        samples_per_n: Coflows drawn per port count, at least 1000.
        rng: Source of randomness.
        beta: Mean packets per port.
        epsilon: Power law tail parameter.

    Raises:
        ValueError: On an unknown family, a short grid or too few samples.
    """
    if family not in FAMILIES:
        raise ValueError(f"Invalid scaling family: {family}, expected one of {FAMILIES}")
    if len(n_grid) < MIN_GRID_POINTS:
        raise ValueError(f"n_grid needs at least {MIN_GRID_POINTS} points, got {len(n_grid)}")
    if samples_per_n < MIN_SAMPLES:
        raise ValueError(f"samples_per_n must be at least {MIN_SAMPLES}, got {samples_per_n}")

    grid = [int(n) for n in n_grid]
    means, std_errors = [], []
    for n in grid:
        taus = sample_clearance_times(_family_model(family, n, beta, epsilon), samples_per_n, rng)
        means.append(float(taus.mean()))
        std_errors.append(float(taus.std(ddof=1) / math.sqrt(samples_per_n)))

    if family == "diagonal-powerlaw":
        fit = fit_scaling(grid, means, "log-log", theory=1.0 / (1.0 + epsilon))
    elif family == "deterministic":
        fit = fit_scaling(grid, means, "log-linear", theory=0.0)
    else:
        fit = fit_scaling(grid, means, "log-linear")
    return ScalingEstimate(family=family, grid=grid, means=means, std_errors=std_errors, fit=fit)
