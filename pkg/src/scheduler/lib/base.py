"""Base scheduling policy interface shared by every scheduler"""
from abc import ABC, abstractmethod
from typing import Iterable, List, Optional

import numpy as np

from src.switch.lib.matching import Matching
from src.switch.lib.traffic import Coflow


class SchedulerPolicy(ABC):
    """
    A per-slot crossbar scheduler.

    The engine calls, for every slot: `on_arrivals` with the coflows that just
    arrived, then `decide` for the slot's matching, then `choose_packet` for each
    activated non-empty VOQ to pick which coflow's packet leaves.
    """

    name = "base"

    def __init__(self, n: int, rng: Optional[np.random.Generator] = None):
        self.n = n
        self.rng = rng if rng is not None else np.random.default_rng()

    def on_arrivals(self, slot: int, arrivals: List[Coflow]) -> None:
        """Hook for policies that track coflows, a no-op by default"""

    def on_completion(self, slot: int, coflow: Coflow) -> None:
        """Hook called once a coflow has sent its last packet"""

    @abstractmethod
    def decide(self, slot: int, state) -> Matching:
        """
        Returns the matching used in `slot`.

        Args:
            slot (int): Current slot index.
            state (SwitchState): VOQ lengths and per-VOQ coflow queues after this slot's arrivals.
        """

    def choose_packet(self, i: int, j: int, candidates: Iterable[Coflow]) -> Optional[int]:
        """
        Picks the coflow whose packet VOQ (i, j) sends; FIFO by arrival by default.

        Args:
            candidates: Coflows with packets left at (i, j), in arrival order.

        Returns:
            Optional[int]: The chosen coflow id, or None to send nothing.
        """
        first = next(iter(candidates), None)
        return None if first is None else first.id

    def stats(self) -> dict:
        """Policy-specific counters reported next to the run metrics"""
        return {}
