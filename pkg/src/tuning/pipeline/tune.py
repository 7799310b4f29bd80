"""CAB parameter tuning: analytic auto-tune for runs and the empirical gamma tuner"""
import math
import pathlib
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Tuple

import click
import numpy as np

sys.path.append(pathlib.Path.cwd().as_posix())
from src.switch.lib.errors import UnstableSystemError  # pylint: disable=wrong-import-position
from src.switch.lib.traffic import (  # pylint: disable=wrong-import-position
    CoflowModel,
    sample_frame_aggregates,
)
from src.tuning.lib.mgf import model_mgf  # pylint: disable=wrong-import-position
from src.tuning.lib.params import (  # pylint: disable=wrong-import-position
    GAMMA_SEARCH_CAP,
    CabParameters,
    maximize_f,
    solve_delta_t,
)


class OverflowHandle(Protocol):
    """Anything that can measure the frame overflow frequency of a running system"""

    n: int
    rho: float

    def measure_overflow(self, frame_size: int, frames: int) -> float:
        ...


@dataclass
class TuneResult:
    """
    Outcome of the empirical tuner.

     Attributes:
         params (CabParameters): the retained (gamma, delta, T).
         measured (float): overflow frequency measured with `params`.
         rounds (int): rounds played.
         converged (bool): False when the tuner stopped on max_rounds or the gamma cap.
         history (List[Tuple[float, float, int, float]]): (gamma, delta, T, measured) per round.
    """

    params: CabParameters
    measured: float
    rounds: int
    converged: bool
    history: List[Tuple[float, float, int, float]] = field(default_factory=list)

    @property
    def gamma(self) -> float:
        return self.params.gamma


class FrameOverflowProbe:
    """Measures overflow directly on sampled frame aggregates of a traffic model"""

    def __init__(self, model: CoflowModel, rng: np.random.Generator):
        self.model = model
        self.rng = rng
        self.n = model.n
        self.rho = model.rho

    def measure_overflow(self, frame_size: int, frames: int) -> float:
        taus = sample_frame_aggregates(self.model, frame_size, frames, self.rng)
        return float(np.mean(taus > frame_size - 1))


def auto_tune(model: CoflowModel, rng: np.random.Generator, verbose: bool = False) -> CabParameters:
    """
    Picks (gamma, delta, T) for a traffic model.

    gamma maximizes f over the port load MGF (closed form or Monte Carlo), then
    delta and T solve the frame sizing equations at the model's load.

    Raises:
        ValueError: For heavy-tailed traffic, which has no exponential overflow bound.
        UnstableSystemError: If rho >= 1.
    """
    if model.family == "powerlaw":
        raise ValueError("Heavy-tailed traffic has no overflow exponent, give CAB an explicit frame_size")
    if model.rho >= 1:
        raise UnstableSystemError(f"CAB tuning needs rho < 1, got rho={model.rho:.4f}")
    search = maximize_f(model.lam, model_mgf(model, rng))
    if search.degenerate and verbose:
        click.echo(f"Warning: gamma sits on the search cap {GAMMA_SEARCH_CAP}, traffic is nearly empty", err=True)
    return solve_delta_t(search.gamma, model.n, model.rho)


def empirical_gamma_tune(
    handle: OverflowHandle,
    initial_gamma: float,
    step: float = 0.8,
    max_rounds: int = 20,
    frames: int = 10_000,
    gamma_cap: float = GAMMA_SEARCH_CAP,
) -> TuneResult:
    """
    Adjusts gamma until the measured overflow frequency matches the target delta.

    Each round solves (delta, T) for the current gamma and measures the
    overflow frequency over `frames` frames. Too much overflow shrinks gamma by
    `step` (larger frames), too little grows it by 1 / `step`; the step is
    square-rooted whenever the direction flips. The tuner stops once the
    measurement is within delta / 2 of delta.

    Args:
        handle: Overflow measurement source with `n` and `rho` attributes.
        initial_gamma (float): Starting exponent.
        step (float): Multiplicative decrease in (0, 1).
        max_rounds (int): Round budget.
        frames (int): Measurement window per round.
        gamma_cap (float): Largest gamma tried.

    Returns:
        TuneResult: the matching parameters, or the best-so-far (largest gamma
        whose measurement stayed at or below its delta) with converged=False.
    """
    if not 0 < step < 1:
        raise ValueError(f"step must lie in (0, 1), got {step}")
    if initial_gamma <= 0:
        raise ValueError(f"initial_gamma must be positive, got {initial_gamma}")

    gamma = min(initial_gamma, gamma_cap)
    factor = step
    direction = 0
    history: List[Tuple[float, float, int, float]] = []
    best: Optional[Tuple[CabParameters, float]] = None
    last: Optional[Tuple[CabParameters, float]] = None
    for round_index in range(1, max_rounds + 1):
        params = solve_delta_t(gamma, handle.n, handle.rho)
        measured = handle.measure_overflow(params.frame_size, frames)
        history.append((params.gamma, params.delta, params.frame_size, measured))
        last = (params, measured)
        if measured <= params.delta and (best is None or params.gamma > best[0].gamma):
            best = (params, measured)
        if abs(measured - params.delta) <= params.delta / 2:
            return TuneResult(params, measured, round_index, True, history)

        new_direction = -1 if measured > params.delta else 1
        if direction and new_direction != direction:
            factor = math.sqrt(factor)
        direction = new_direction
        if direction > 0 and gamma >= gamma_cap:
            break
        gamma = gamma * factor if direction < 0 else min(gamma / factor, gamma_cap)

    params, measured = best if best is not None else last
    return TuneResult(params, measured, len(history), False, history)

