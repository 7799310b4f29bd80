"""CAB parameter selection: Chernoff exponent gamma, overflow target delta and frame size T"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from src.analysis.lib.oracle import gi_g1_wait
from src.switch.lib.errors import ConvergenceError, UnstableSystemError
from src.tuning.lib.mgf import PortLoadMgf

GAMMA_SEARCH_CAP = 5.0
GRID_POINTS = 201
MAX_ITERATIONS = 1000


@dataclass(frozen=True)
class CabParameters:
    """Consistent (gamma, delta, frame_size) triple"""

    gamma: float
    delta: float
    frame_size: int


@dataclass(frozen=True)
class GammaSearch:
    """Maximizer of f together with whether it sits on the search cap"""

    s_star: float
    gamma: float
    degenerate: bool


def f_of_s(s: float, lam: float, mgf: PortLoadMgf) -> float:
    """
    f(s) = lam (1 - M_B(s)) + s.

    Raises:
        ValueError: If s is negative or outside the MGF domain.
    """
    if s < 0 or s >= mgf.domain_sup:
        raise ValueError(f"s={s} is outside the MGF domain [0, {mgf.domain_sup})")
    return lam * (1.0 - mgf(s)) + s


def maximize_f(lam: float, mgf: PortLoadMgf) -> GammaSearch:
    """
    Locates the maximum of the concave f on [0, min(domain_sup (1 - 1e-6), 5)].

    A uniform grid brackets the peak, then golden-section search refines it.

    Raises:
        UnstableSystemError: If rho = lam E[B] >= 1.
    """
    rho = lam * mgf.mean
    if rho >= 1:
        raise UnstableSystemError(f"Overflow exponent needs rho < 1, got rho={rho:.4f}")
    upper = min(mgf.domain_sup * (1.0 - 1e-6), GAMMA_SEARCH_CAP)
    grid = np.linspace(0.0, upper, GRID_POINTS)
    values = np.array([f_of_s(s, lam, mgf) for s in grid])
    best = int(np.argmax(values))
    s_star, gamma = float(grid[best]), float(values[best])
    if best == GRID_POINTS - 1:
        return GammaSearch(s_star, gamma, degenerate=upper >= GAMMA_SEARCH_CAP)

    if 0 < best and values[best] > values[best - 1] and values[best] > values[best + 1]:
        result = minimize_scalar(
            lambda s: -f_of_s(s, lam, mgf),
            bracket=(grid[best - 1], grid[best], grid[best + 1]),
            method="golden",
        )
        if grid[best - 1] <= result.x <= grid[best + 1] and -result.fun > gamma:
            s_star, gamma = float(result.x), float(-result.fun)
    return GammaSearch(s_star, gamma, degenerate=False)


def compute_gamma(lam: float, mgf: PortLoadMgf) -> float:
    """
    gamma = max over s of lam (1 - M_B(s)) + s.

    Args:
        lam (float): Coflow arrival rate.
        mgf (PortLoadMgf): Port load MGF.

    Returns:
        float: The positive exponent of the overflow bound.
    """
    return maximize_f(lam, mgf).gamma


def _frame_for(gamma: float, n: int, delta: float) -> int:
    return max(2, math.ceil(math.log(2.0 * n / delta) / gamma))


def _delta_for(n: int, frame_size: int, rho: float) -> float:
    return 1.0 / (2.0 * n * frame_size * (rho + 1.0) * (1.0 + n * frame_size))


def solve_delta_t(gamma: float, n: int, rho: float) -> CabParameters:
    """
    Solves delta N T (rho + 1)(1 + N T) = 1/2 and T = ceil(log(2N / delta) / gamma) jointly.

    Starts from delta = 1 / (2 N^2) and alternates the two equations until T
    stops moving. T never drops below 2.

    Args:
        gamma (float): Overflow exponent.
        n (int): Port count.
        rho (float): Load, 0 <= rho < 1.

    Returns:
        CabParameters: the consistent triple.

    Raises:
        ValueError: On a non-positive gamma or n.
        UnstableSystemError: If rho >= 1.
        ConvergenceError: If T is still moving after 1000 iterations.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if rho >= 1:
        raise UnstableSystemError(f"Frame sizing needs rho < 1, got rho={rho:.4f}")
    if rho < 0:
        raise ValueError(f"rho must be non-negative, got {rho}")

    delta = 1.0 / (2.0 * n * n)
    frame_size = _frame_for(gamma, n, delta)
    seen = {frame_size}
    for _ in range(MAX_ITERATIONS):
        delta = _delta_for(n, frame_size, rho)
        next_frame = _frame_for(gamma, n, delta)
        if next_frame == frame_size:
            return CabParameters(gamma, delta, frame_size)
        if next_frame in seen:
            # integer oscillation, settle on the larger frame
            frame_size = max(frame_size, next_frame)
            return CabParameters(gamma, _delta_for(n, frame_size, rho), frame_size)
        seen.add(next_frame)
        frame_size = next_frame
    raise ConvergenceError(f"Frame size did not settle for gamma={gamma}, n={n}, rho={rho}")


def overflow_bound(n: int, gamma: float, t: float) -> float:
    """Chernoff bound 2 n exp(-gamma t) on the probability a frame's arrivals need more than t slots"""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return 2.0 * n * math.exp(-gamma * t)


def heavy_traffic_gamma(lam: float, beta: float, sigma2: float, mgf: PortLoadMgf = None) -> Tuple[float, float]:
    """
    Closed-form maximizer s* = (1 - rho) / (lam (sigma^2 + beta^2)) and gamma = f(s*).

    f is evaluated through the exact MGF. Without an explicit `mgf` only the
    deterministic case (sigma2 == 0) can be built.

    Returns:
        (s_star, gamma)

    Raises:
        UnstableSystemError: If rho = lam beta >= 1.
        ValueError: If s* leaves the MGF domain or no MGF is available.
    """
    rho = lam * beta
    if rho >= 1:
        raise UnstableSystemError(f"Heavy-traffic exponent needs rho < 1, got rho={rho:.4f}")
    if mgf is None:
        if sigma2 != 0:
            raise ValueError("heavy_traffic_gamma needs an mgf unless the port load is deterministic")
        mgf = PortLoadMgf.deterministic(beta)
    s_star = (1.0 - rho) / (lam * (sigma2 + beta**2))
    return s_star, f_of_s(s_star, lam, mgf)


def taylor_f_of_s(s: float, lam: float, beta: float, sigma2: float) -> float:
    """Second-order expansion (1 - rho) s - lam (sigma^2 + beta^2) s^2 / 2 of f"""
    return (1.0 - lam * beta) * s - lam * (sigma2 + beta**2) * s**2 / 2.0


def stability_lhs(delta: float, n: int, lam: float, beta: float, t: int) -> float:
    """
    delta N (lam T + T / beta)(beta + T): an upper estimate of delta E[U].

    The frame-level FIFO of non-conforming coflows is stable while this stays below 1.
    """
    return delta * n * (lam * t + t / beta) * (beta + t)


def nonconforming_fraction_bound(delta: float, rho: float) -> float:
    """Long-run share of non-conforming coflows is at most 2 delta / rho"""
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return 2.0 * delta / rho


def fifo_service_moments_bound(n: int, lam: float, beta: float, sigma2: float, t: int) -> Tuple[float, float]:
    """
    Upper bounds on E[U] and E[U^2] for U, the service time in frames of one overflow batch.

    The batch holds at most Poisson(lam T) + T / beta coflows, each putting at
    most sum_j X_ij + T packets on a port.

    Returns:
        (E[U] bound, E[U^2] bound)
    """
    batch = lam * t + t / beta
    first = n * batch * (beta + t)
    variance = n * (batch * sigma2 + (beta + t) ** 2 * (2.0 * lam * t + t / beta + batch**2))
    return first, variance + first**2


def cab_delay_bound(params: CabParameters, n: int, lam: float, beta: float, sigma2: float) -> float:
    """
    Mean coflow delay bound in slots: 2T + (2 delta / rho) T Delay(FIFO).

    Delay(FIFO) is the GI/GI/1 delay in frames of the non-conforming queue, fed
    with the moment bounds of fifo_service_moments_bound. Returns inf when
    those bounds make the queue unstable.
    """
    t = params.frame_size
    e_u, e_u2 = fifo_service_moments_bound(n, lam, beta, sigma2, t)
    if params.delta * e_u >= 1:
        return math.inf
    fifo_frames = gi_g1_wait(params.delta, e_u, e_u2)
    return 2.0 * t + nonconforming_fraction_bound(params.delta, lam * beta) * t * fifo_frames


def heavy_traffic_frame_size(lam: float, beta: float, sigma2: float, n: int, mgf: PortLoadMgf = None) -> int:
    """Frame size solve_delta_t picks when gamma comes from the heavy-traffic maximizer"""
    _, gamma = heavy_traffic_gamma(lam, beta, sigma2, mgf)
    return solve_delta_t(gamma, n, lam * beta).frame_size
