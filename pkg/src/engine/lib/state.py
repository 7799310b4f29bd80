"""Switch state: VOQ lengths, per-VOQ coflow queues and the active coflow registry"""
from typing import Dict, Iterator, List, Optional

import numpy as np

from src.switch.lib.traffic import Coflow


class SwitchState:
    """
    VOQ bookkeeping of an n x n input-queued switch.

    `voq[i, j]` is the number of packets waiting at input i for output j and
    `voq_coflows[i][j]` lists, in arrival order, the ids of coflows that still
    have packets there.
    """

    def __init__(self, n: int):
        self.n = n
        self.slot = 0
        self.voq = np.zeros((n, n), dtype=np.int64)
        self.voq_coflows: List[List[List[int]]] = [[[] for _ in range(n)] for _ in range(n)]
        self.registry: Dict[int, Coflow] = {}
        self.arrived_packets = 0
        self.served_packets = 0

    @property
    def backlog(self) -> int:
        return self.arrived_packets - self.served_packets

    def admit(self, coflow: Coflow) -> None:
        """Registers a coflow and queues its packets"""
        self.registry[coflow.id] = coflow
        self.voq += coflow.demand
        self.arrived_packets += coflow.remaining_total
        for i, j in zip(*np.nonzero(coflow.demand)):
            self.voq_coflows[i][j].append(coflow.id)

    def candidates(self, i: int, j: int) -> Iterator[Coflow]:
        """Coflows with packets at VOQ (i, j), oldest first, yielded lazily"""
        return (self.registry[cid] for cid in self.voq_coflows[i][j])

    def serve(self, i: int, j: int, coflow_id: int) -> Optional[Coflow]:
        """
        Sends one packet of `coflow_id` from VOQ (i, j).

        Returns:
            Optional[Coflow]: The coflow when this was its last packet, else None.

        Raises:
            ValueError: If the coflow has no packet at (i, j).
        """
        coflow = self.registry[coflow_id]
        if coflow.remaining[i, j] <= 0:
            raise ValueError(f"Coflow {coflow_id} has no packet at VOQ ({i}, {j})")
        coflow.remaining[i, j] -= 1
        coflow.remaining_total -= 1
        self.voq[i, j] -= 1
        self.served_packets += 1
        if coflow.remaining[i, j] == 0:
            self.voq_coflows[i][j].remove(coflow_id)
        if coflow.remaining_total == 0:
            del self.registry[coflow_id]
            return coflow
        return None

    def check_conservation(self) -> None:
        """
        Raises:
            AssertionError: If VOQ lengths disagree with the registry or with arrivals minus departures.
        """
        remaining = np.zeros_like(self.voq)
        for coflow in self.registry.values():
            remaining += coflow.remaining
        assert np.array_equal(remaining, self.voq), f"VOQ lengths drifted from coflow remainders at slot {self.slot}"
        assert int(self.voq.sum()) == self.backlog, f"Packets were created or lost at slot {self.slot}"
        assert (self.voq >= 0).all(), f"Negative VOQ length at slot {self.slot}"
