"""Discrete-time simulation of an input-queued switch under one scheduling policy"""
import math
import pathlib
import sys
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

sys.path.append(pathlib.Path.cwd().as_posix())
from src.engine.lib.config import SimConfig  # pylint: disable=wrong-import-position
from src.engine.lib.metrics import (  # pylint: disable=wrong-import-position
    DelayCollector,
    MetricsRecord,
    coflow_delay,
    stability_probe,
)
from src.engine.lib.state import SwitchState  # pylint: disable=wrong-import-position
from src.scheduler.lib.base import SchedulerPolicy  # pylint: disable=wrong-import-position
from src.scheduler.lib.builder import build_policy  # pylint: disable=wrong-import-position
from src.switch.lib.errors import (  # pylint: disable=wrong-import-position
    InfeasibleMatchingError,
    UnstableSystemError,
)
from src.switch.lib.matching import is_feasible  # pylint: disable=wrong-import-position
from src.switch.lib.traffic import (  # pylint: disable=wrong-import-position
    Coflow,
    as_traffic_matrix,
    sample_arrivals,
)
from src.switch.lib.utils import make_streams  # pylint: disable=wrong-import-position
from src.tuning.lib.params import CabParameters  # pylint: disable=wrong-import-position
from src.tuning.pipeline.tune import auto_tune  # pylint: disable=wrong-import-position


class Simulator:
    """
    Slot-by-slot switch simulation.

    Every slot runs arrivals, then the policy decision, then service: arrivals
    are visible to the decision of their own slot. Coflows arriving before
    `warmup_slots` are simulated but left out of the metrics.

    The backlog trace holds the mean backlog of consecutive post-warmup
    windows. For framed policies a window spans whole frames, so the
    frame-periodic swing of the backlog averages out.

    Args:
        config (SimConfig): Run configuration.
        policy (Optional[SchedulerPolicy]): Overrides the policy built from `config.policy`.
        progress (bool): Show a tqdm bar while running.
        keep_completed (bool): Keep finished coflows in `completed`, demands included.

    Raises:
        UnstableSystemError: If stationary metrics are requested with rho >= 1.
    """

    def __init__(
        self,
        config: SimConfig,
        policy: Optional[SchedulerPolicy] = None,
        progress: bool = False,
        keep_completed: bool = False,
    ):
        self.config = config
        self.model = config.model
        self.progress = progress
        if config.metrics.stationary and self.model.rho >= 1:
            raise UnstableSystemError(
                f"Stationary metrics need rho < 1, got rho={self.model.rho:.4f}; disable them to probe overload"
            )
        self.streams = make_streams(config.seed)
        self.params: Optional[CabParameters] = None
        if policy is None:
            if config.policy.name == "cab" and config.policy.frame_size is None:
                self.params = auto_tune(self.model, self.streams.tuning)
            policy = build_policy(
                config.policy,
                self.model,
                self.streams.policy,
                params=self.params,
                count_from_slot=config.warmup_slots,
            )
        self.policy = policy
        self.state = SwitchState(self.model.n)
        self.collector = DelayCollector()
        self.next_id = 0
        self.injected: Dict[int, List[np.ndarray]] = {}
        self.keep_completed = keep_completed
        self.completed: List[Coflow] = []
        self.backlog_trace: List[Tuple[int, float]] = []
        span = config.horizon_slots - config.warmup_slots
        self.trace_every = max(1, span // config.metrics.trace_samples)
        frame_size = getattr(self.policy, "frame_size", None)
        if frame_size is not None:
            self.trace_every = frame_size * math.ceil(self.trace_every / frame_size)
        self._window_sum = 0
        self._window_slots = 0
        self.max_conforming_delay: Optional[int] = None
        self.conforming_violations = 0

    def inject(self, demand, slot: int = 0) -> None:
        """Adds a coflow with the given demand to the arrivals of `slot`"""
        if slot < self.state.slot:
            raise ValueError(f"Cannot inject into past slot {slot}, simulation is at {self.state.slot}")
        self.injected.setdefault(slot, []).append(as_traffic_matrix(demand, self.model.n))

    @property
    def counting(self) -> bool:
        return self.state.slot >= self.config.warmup_slots

    def _arrivals(self, slot: int) -> List[Coflow]:
        arrivals = sample_arrivals(
            self.model, slot, self.streams.arrivals, self.next_id, size_rng=self.streams.flow_sizes
        )
        self.next_id += len(arrivals)
        for demand in self.injected.pop(slot, []):
            arrivals.append(Coflow(id=self.next_id, arrival_slot=slot, demand=demand))
            self.next_id += 1
        return arrivals

    def _complete(self, coflow: Coflow, slot: int) -> None:
        coflow.completion_slot = slot
        if self.keep_completed:
            self.completed.append(coflow)
        self.policy.on_completion(slot, coflow)
        if coflow.arrival_slot < self.config.warmup_slots:
            return
        self.collector.add_coflow(coflow)
        if coflow.conforming:
            delay = coflow_delay(coflow)
            if self.max_conforming_delay is None or delay > self.max_conforming_delay:
                self.max_conforming_delay = delay
            if delay > 2 * self.policy.frame_size:
                self.conforming_violations += 1

    def step(self) -> None:
        """Simulates one slot"""
        state = self.state
        slot = state.slot
        counting = self.counting

        admitted = []
        for coflow in self._arrivals(slot):
            if coflow.remaining_total == 0:
                self._complete(coflow, slot)
                continue
            state.admit(coflow)
            admitted.append(coflow)
        self.policy.on_arrivals(slot, admitted)

        matching = self.policy.decide(slot, state)
        if matching.n != self.model.n or not is_feasible(matching):
            raise InfeasibleMatchingError(
                f"Policy {self.policy.name} returned an infeasible matching {matching} at slot {slot}"
            )

        for i, j in matching.pairs():
            if state.voq[i, j] == 0:
                continue
            chosen = self.policy.choose_packet(i, j, state.candidates(i, j))
            if chosen is None:
                continue
            owner = state.registry[chosen]
            if owner.arrival_slot >= self.config.warmup_slots:
                self.collector.add_packet(slot - owner.arrival_slot + 1)
                if owner.remaining[i, j] == owner.demand[i, j]:
                    self.collector.add_voq_wait(slot - owner.arrival_slot)
            finished = state.serve(i, j, chosen)
            if finished is not None:
                self._complete(finished, slot)

        if self.config.debug:
            state.check_conservation()
        if counting:
            self._trace(slot)
        state.slot += 1

    def run(self) -> MetricsRecord:
        """Runs up to the horizon and returns the metrics"""
        for _ in tqdm(
            range(self.state.slot, self.config.horizon_slots),
            desc=f"Simulating {self.policy.name}",
            disable=not self.progress,
        ):
            self.step()
        return self.metrics()

    def run_frames(self, frames: int) -> Optional[float]:
        """Runs `frames` CAB frames past the current slot and returns the overflow frequency so far"""
        frame_size = getattr(self.policy, "frame_size", None)
        if frame_size is None:
            raise ValueError(f"Policy {self.policy.name} has no frames")
        for _ in range(frames * frame_size):
            self.step()
        return self.overflow_frequency

    @property
    def overflow_frequency(self) -> Optional[float]:
        return self.policy.stats().get("overflow_frequency")

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def rho(self) -> float:
        return self.model.rho

    def measure_overflow(self, frame_size: int, frames: int) -> float:
        """
        Resizes the running CAB policy to `frame_size` and returns the overflow
        frequency of the frames it closes over the next `frames` frames.

        Raises:
            ValueError: If the policy has no resizable frames.
        """
        resize = getattr(self.policy, "resize", None)
        if resize is None:
            raise ValueError(f"Policy {self.policy.name} has no frames")
        resize(frame_size)
        closed, overflowed = self.policy.closed_frames, self.policy.overflowed_frames
        self.run_frames(frames)
        measured = self.policy.closed_frames - closed
        if measured == 0:
            return 0.0
        return (self.policy.overflowed_frames - overflowed) / measured

    def _trace(self, slot: int) -> None:
        self._window_sum += self.state.backlog
        self._window_slots += 1
        if self._window_slots == self.trace_every:
            self.backlog_trace.append((slot, self._window_sum / self._window_slots))
            self._window_sum = 0
            self._window_slots = 0

    def metrics(self) -> MetricsRecord:
        """Summarizes the coflows completed so far"""
        config = self.config
        collector = self.collector
        policy_stats = self.policy.stats()
        mean_coflow = collector.mean_coflow_delay()
        mean_packet = collector.mean_packet_delay()
        dilation = None
        if config.metrics.dilation and mean_coflow and mean_packet:
            dilation = mean_coflow / mean_packet
        frame_size = getattr(self.policy, "frame_size", None)
        return MetricsRecord(
            policy=self.policy.name,
            n=self.model.n,
            lam=self.model.lam,
            beta=self.model.beta,
            rho=self.model.rho,
            seed=config.seed,
            horizon=config.horizon_slots,
            warmup=config.warmup_slots,
            frame_size=frame_size,
            gamma=getattr(self.policy, "gamma", None),
            delta=getattr(self.policy, "delta", None),
            sctf=bool(getattr(self.policy, "sctf", False)),
            dynamic_frames=bool(getattr(self.policy, "dynamic_frames", False)),
            completed_coflows=collector.completed,
            empty_coflows=collector.empty_coflows,
            mean_coflow_delay=mean_coflow,
            coflow_delay_percentiles=collector.percentiles(config.metrics.percentiles),
            mean_packet_delay=mean_packet,
            dilation_factor=dilation,
            eta_nonconforming=policy_stats.get("eta_nonconforming"),
            overflow_frequency=policy_stats.get("overflow_frequency"),
            stable=stability_probe(self.backlog_trace) if len(self.backlog_trace) >= 10 else None,
            backlog_trace=list(self.backlog_trace),
            mean_voq_wait=collector.mean_voq_wait(),
            max_conforming_delay=self.max_conforming_delay,
            conforming_violations=self.conforming_violations if frame_size is not None else None,
            mean_nonconforming_service=policy_stats.get("mean_nonconforming_service"),
        )


def run(config: SimConfig, progress: bool = False) -> MetricsRecord:
    """
    Runs one simulation.

    Args:
        config (SimConfig): Run configuration.
        progress (bool): Show a tqdm bar.

    Returns:
        MetricsRecord: Metrics over coflows arriving after warmup and completing before the horizon.
    """
    return Simulator(config, progress=progress).run()
