"""Analytical queueing oracles and a frame-level FIFO simulator"""
from typing import Callable

import numpy as np

from src.switch.lib.errors import UnstableSystemError


def mg1_slotted_wait(lam: float, e_u: float, e_u2: float) -> float:
    """
    Mean wait of a slotted M/G/1 queue, lam E[U^2] / (2 (1 - lam E[U])) + 1/2.

    Args:
        lam (float): Batch arrival rate per slot.
        e_u (float): First moment of the service time.
        e_u2 (float): Second moment of the service time.

    Raises:
        UnstableSystemError: If lam E[U] >= 1.
    """
    load = lam * e_u
    if load >= 1:
        raise UnstableSystemError(f"M/G/1 queue is unstable, lam E[U] = {load:.4f}")
    return lam * e_u2 / (2.0 * (1.0 - load)) + 0.5


def periodic_voq_wait(lam: float, e_u: float, e_u2: float, n: int) -> float:
    """
    Mean slots a batch waits in its VOQ before its first packet leaves, when the
    VOQ is visited once every n slots.

    The batches ahead of it form the slotted M/G/1 queue; on top of that the
    batch waits for the next visit of its VOQ, (n - 1) / 2 slots on average.

    Args:
        lam (float): Batch arrival rate per slot.
        e_u (float): First moment of the service time (n times the batch size).
        e_u2 (float): Second moment of the service time.
        n (int): Slots between two visits of the VOQ.
    """
    return mg1_slotted_wait(lam, e_u, e_u2) + (n - 1) / 2.0


def gi_g1_wait(delta: float, e_u: float, e_u2: float) -> float:
    """
    Mean delay in frames of a discrete-time queue with Bernoulli(delta) arrivals.

    (delta E[U^2] - delta E[U]) / (2 (1 - delta E[U])) + E[U]

    Raises:
        UnstableSystemError: If delta E[U] >= 1.
    """
    load = delta * e_u
    if load >= 1:
        raise UnstableSystemError(f"GI/GI/1 queue is unstable, delta E[U] = {load:.4f}")
    return (delta * e_u2 - delta * e_u) / (2.0 * (1.0 - load)) + e_u


def simulate_bernoulli_fifo(
    delta: float,
    service: Callable[[np.random.Generator], int],
    customers: int,
    rng: np.random.Generator,
) -> float:
    """
    Mean delay (wait plus service, in frames) of a FIFO queue fed one customer per frame with probability delta.

    Runs the Lindley recursion W' = max(0, W + U - A) with geometric
    inter-arrival gaps A >= 1.

    Args:
        delta (float): Per-frame arrival probability.
        service (Callable): Draws one service time in frames.
        customers (int): Number of simulated customers.
        rng (np.random.Generator): Randomness for gaps and services.
    """
    gaps = rng.geometric(delta, size=customers)
    wait = 0
    total = 0
    for k in range(customers):
        service_time = service(rng)
        total += wait + service_time
        wait = max(0, wait + service_time - int(gaps[k]))
    return total / customers
