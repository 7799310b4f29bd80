"""Coflow-agnostic baseline schedulers: randomized, periodic and max-weight matching"""
from typing import List, Optional, Tuple

import numpy as np

from src.scheduler.lib.base import SchedulerPolicy
from src.switch.lib.matching import Matching, bvn_decompose, max_weight_matching

MODES = ("uniform", "bvn")


def bvn_cycle(terms: List[Tuple[float, Matching]], period: int) -> List[int]:
    """
    Slot counts per decomposition term so term k is used round(p_k * period) times.

    Rounds with the largest remainder method, never handing out more than
    `period` slots in total. The leftover slots of the cycle idle.
    """
    if period < 1:
        raise ValueError(f"period must be positive, got {period}")
    exact = np.array([p for p, _ in terms]) * period
    counts = np.floor(exact).astype(int)
    budget = min(period, int(round(exact.sum()))) - int(counts.sum())
    for k in np.argsort(-(exact - counts), kind="stable")[: max(budget, 0)]:
        counts[k] += 1
    return counts.tolist()


class RandomizedScheduler(SchedulerPolicy):
    """
    Memoryless randomized scheduler.

    In "uniform" mode every slot uses a fresh uniformly random permutation, in
    "bvn" mode it samples term k of the rate matrix's decomposition with
    probability p_k and idles with the remaining probability.
    """

    name = "randomized"

    def __init__(
        self,
        n: int,
        rng: Optional[np.random.Generator] = None,
        mode: str = "uniform",
        rate: Optional[np.ndarray] = None,
    ):
        super().__init__(n, rng)
        if mode not in MODES:
            raise ValueError(f"Invalid randomized mode: {mode}")
        self.mode = mode
        if mode == "bvn":
            if rate is None:
                raise ValueError("bvn mode needs a rate matrix")
            self.terms = bvn_decompose(rate)
            weights = [p for p, _ in self.terms]
            self.probabilities = np.array(weights + [max(0.0, 1.0 - sum(weights))])
            self.probabilities /= self.probabilities.sum()

    def decide(self, slot: int, state) -> Matching:
        if self.mode == "uniform":
            return Matching(self.rng.permutation(self.n))
        k = int(self.rng.choice(len(self.probabilities), p=self.probabilities))
        if k == len(self.terms):
            return Matching.idle(self.n)
        return self.terms[k][1]


class PeriodicScheduler(SchedulerPolicy):
    """
    Deterministic cyclic scheduler.

    In "uniform" mode input i serves output (i + t + 1) mod n in slot t, so each
    pair is served once every n slots. In "bvn" mode a cycle of `period` slots
    replays each decomposition term in proportion to its weight.
    """

    name = "periodic"

    def __init__(
        self,
        n: int,
        rng: Optional[np.random.Generator] = None,
        mode: str = "uniform",
        rate: Optional[np.ndarray] = None,
        period: int = 1000,
    ):
        super().__init__(n, rng)
        if mode not in MODES:
            raise ValueError(f"Invalid periodic mode: {mode}")
        self.mode = mode
        self.inputs = np.arange(n)
        if mode == "bvn":
            if rate is None:
                raise ValueError("bvn mode needs a rate matrix")
            terms = bvn_decompose(rate)
            self.cycle: List[Matching] = []
            for (_, matching), count in zip(terms, bvn_cycle(terms, period)):
                self.cycle.extend([matching] * count)
            self.cycle.extend([Matching.idle(n)] * (period - len(self.cycle)))

    def decide(self, slot: int, state) -> Matching:
        if self.mode == "uniform":
            return Matching((self.inputs + slot + 1) % self.n)
        return self.cycle[slot % len(self.cycle)]


class MaxWeightScheduler(SchedulerPolicy):
    """Max-weight matching on the current VOQ lengths, ties broken lexicographically"""

    name = "mwm"

    def decide(self, slot: int, state) -> Matching:
        return max_weight_matching(state.voq)
