"""Coflow-aware batching (CAB) scheduler"""
from collections import deque
from typing import Deque, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.scheduler.lib.base import SchedulerPolicy
from src.switch.lib.matching import ClearanceSchedule, Matching, clearance_schedule
from src.switch.lib.traffic import Coflow, aggregate


def cab_select_conforming(coflows: Sequence[Coflow], frame_size: int) -> Tuple[List[Coflow], List[Coflow]]:
    """
    Splits one frame's arrivals into a conforming batch and the rest.

    Coflows are scanned in arrival order (then id); each is accepted when the
    batch stays clearable in frame_size - 1 slots, and the scan carries on past
    rejections.

    Args:
        coflows: Arrivals of one frame.
        frame_size (int): Frame length T.

    Returns:
        (conforming, nonconforming), both in arrival order.
    """
    limit = frame_size - 1
    conforming: List[Coflow] = []
    nonconforming: List[Coflow] = []
    rows: Optional[np.ndarray] = None
    cols: Optional[np.ndarray] = None
    for coflow in sorted(coflows, key=lambda c: (c.arrival_slot, c.id)):
        c_rows = coflow.demand.sum(axis=1)
        c_cols = coflow.demand.sum(axis=0)
        new_rows = c_rows if rows is None else rows + c_rows
        new_cols = c_cols if cols is None else cols + c_cols
        if max(new_rows.max(), new_cols.max()) <= limit:
            conforming.append(coflow)
            rows, cols = new_rows, new_cols
        else:
            nonconforming.append(coflow)
    return conforming, nonconforming


class CabScheduler(SchedulerPolicy):
    """
    Frame-based coflow scheduler.

    Time is cut into frames of T slots. Coflows arriving during frame k are
    split at the start of frame k + 1: a conforming batch that fits in T - 1
    slots is cleared in the first T - 1 slots of that frame, while the others
    join a FIFO queue whose head receives one matching of its own clearance
    schedule in the last slot of every frame.

    Args:
        n (int): Port count.
        frame_size (int): Frame length T >= 2.
        sctf (bool): Serve the batch shortest-clearance-time first inside each VOQ.
        dynamic_frames (bool): Open a new frame as soon as the switch has no batch
            or FIFO work left and new coflows are waiting.
        count_from_slot (int): Frames starting before this slot are left out of the stats.

    `closed_frames` and `overflowed_frames` count every frame, warmup included.
    """

    name = "cab"

    def __init__(
        self,
        n: int,
        frame_size: int,
        rng: Optional[np.random.Generator] = None,
        sctf: bool = False,
        dynamic_frames: bool = False,
        gamma: Optional[float] = None,
        delta: Optional[float] = None,
        count_from_slot: int = 0,
    ):
        super().__init__(n, rng)
        if int(frame_size) != frame_size or frame_size < 2:
            raise ValueError(f"frame_size must be an integer >= 2, got {frame_size}")
        self.frame_size = int(frame_size)
        self.sctf = sctf
        self.dynamic_frames = dynamic_frames
        self.gamma = gamma
        self.delta = delta
        self.count_from_slot = count_from_slot

        self.frame_start = 0
        self.pending: List[Coflow] = []
        self.batch: List[Coflow] = []
        self.batch_schedule = ClearanceSchedule(covers=np.zeros((n, n), dtype=np.int64))
        self.batch_cursor = 0
        self.fifo: Deque[Coflow] = deque()
        self.fifo_schedules: Dict[int, ClearanceSchedule] = {}
        self.fifo_cursor = 0
        self._batch_ids: FrozenSet[int] = frozenset()
        self._allowed: FrozenSet[int] = frozenset()

        self.frames = 0
        self.overflow_frames = 0
        self.conforming_count = 0
        self.nonconforming_count = 0
        self.nonconforming_service = 0
        self.closed_frames = 0
        self.overflowed_frames = 0

    def _rotate(self, slot: int) -> None:
        """Closes the collecting frame and schedules its arrivals from `slot` on"""
        collected, self.pending = self.pending, []
        conforming, nonconforming = cab_select_conforming(collected, self.frame_size)
        self.frame_start = slot
        self.batch = conforming
        self.batch_schedule = clearance_schedule(aggregate(conforming, self.n))
        self.batch_cursor = 0
        self._batch_ids = frozenset(c.id for c in conforming)
        for coflow in conforming:
            coflow.conforming = True
        for coflow in nonconforming:
            coflow.conforming = False
            self.fifo.append(coflow)
            self.fifo_schedules[coflow.id] = clearance_schedule(coflow.demand)
        self.closed_frames += 1
        self.overflowed_frames += bool(nonconforming)

        if slot >= self.count_from_slot:
            self.frames += 1
            self.conforming_count += len(conforming)
            self.nonconforming_count += len(nonconforming)
            if nonconforming:
                self.overflow_frames += 1
                self.nonconforming_service += sum(c.clearance for c in nonconforming)

    def _advance_frame(self, slot: int) -> None:
        if slot - self.frame_start >= self.frame_size:
            self._rotate(slot)

    def dynamic_frame_check(self) -> bool:
        """True iff the batch schedule is used up, its coflows are complete and the FIFO is empty"""
        return (
            self.batch_cursor >= len(self.batch_schedule)
            and all(c.is_complete for c in self.batch)
            and not self.fifo
        )

    def on_arrivals(self, slot: int, arrivals: List[Coflow]) -> None:
        self._advance_frame(slot)
        self.pending.extend(arrivals)

    def decide(self, slot: int, state) -> Matching:
        self._advance_frame(slot)
        if self.dynamic_frames and self.pending and self.dynamic_frame_check():
            self._rotate(slot)

        phase = slot - self.frame_start
        if phase < self.frame_size - 1:
            if self.batch_cursor < len(self.batch_schedule):
                matching = self.batch_schedule.matchings[self.batch_cursor]
                self.batch_cursor += 1
                self._allowed = self._batch_ids
                return matching
        elif self.fifo:
            head = self.fifo[0]
            schedule = self.fifo_schedules[head.id]
            matching = schedule.matchings[self.fifo_cursor]
            self.fifo_cursor += 1
            if self.fifo_cursor == len(schedule):
                self.fifo.popleft()
                del self.fifo_schedules[head.id]
                self.fifo_cursor = 0
            self._allowed = frozenset((head.id,))
            return matching

        self._allowed = frozenset()
        return Matching.idle(self.n)

    def choose_packet(self, i: int, j: int, candidates: Iterable[Coflow]) -> Optional[int]:
        allowed = (c for c in candidates if c.id in self._allowed)
        if self.sctf:
            chosen = min(allowed, key=lambda c: (c.clearance, c.arrival_slot, c.id), default=None)
        else:
            chosen = next(allowed, None)
        return None if chosen is None else chosen.id

    def resize(self, frame_size: int) -> None:
        """
        Switches to frames of `frame_size` slots.

        The collecting frame ends as soon as it is `frame_size` slots old, so a
        shorter size closes it at the next slot.
        """
        if int(frame_size) != frame_size or frame_size < 2:
            raise ValueError(f"frame_size must be an integer >= 2, got {frame_size}")
        self.frame_size = int(frame_size)

    def stats(self) -> dict:
        selected = self.conforming_count + self.nonconforming_count
        return {
            "frames": self.frames,
            "overflow_frequency": self.overflow_frames / self.frames if self.frames else 0.0,
            "eta_nonconforming": self.nonconforming_count / selected if selected else 0.0,
            "mean_nonconforming_service": (
                self.nonconforming_service / self.overflow_frames if self.overflow_frames else 0.0
            ),
        }
