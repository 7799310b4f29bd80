"""Delay metrics, percentiles and the backlog stability probe"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.switch.lib.traffic import Coflow

STABILITY_SLOPE = 1e-3


@dataclass
class MetricsRecord:
    """
    MetricsRecord: outcome of one run, echoed configuration included.

    Delay fields are None when no coflow completed; CAB-only fields are None
    for the other policies.
    """

    policy: str
    n: int
    lam: float
    beta: float
    rho: float
    seed: int
    horizon: int
    warmup: int
    frame_size: Optional[int] = None
    gamma: Optional[float] = None
    delta: Optional[float] = None
    sctf: bool = False
    dynamic_frames: bool = False
    completed_coflows: int = 0
    empty_coflows: int = 0
    mean_coflow_delay: Optional[float] = None
    coflow_delay_percentiles: Dict[float, float] = field(default_factory=dict)
    mean_packet_delay: Optional[float] = None
    dilation_factor: Optional[float] = None
    eta_nonconforming: Optional[float] = None
    overflow_frequency: Optional[float] = None
    stable: Optional[bool] = None
    backlog_trace: List[Tuple[int, float]] = field(default_factory=list, repr=False)
    mean_voq_wait: Optional[float] = None
    max_conforming_delay: Optional[int] = None
    conforming_violations: Optional[int] = None
    mean_nonconforming_service: Optional[float] = None
    status: str = "ok"
    error: str = ""


def coflow_delay(coflow: Coflow) -> int:
    """
    Slots from arrival to the last packet, both ends counted: completion - arrival + 1.

    An all-zero coflow has delay 0.

    Raises:
        ValueError: If the coflow is not complete.
    """
    if coflow.completion_slot is None or not coflow.is_complete:
        raise ValueError(f"Coflow {coflow.id} is not complete")
    if not coflow.demand.any():
        return 0
    return coflow.completion_slot - coflow.arrival_slot + 1


def percentile(delays: Sequence[float], q: float) -> float:
    """
    Nearest-rank quantile: the ceil(q m)-th smallest of m values.

    Raises:
        ValueError: On an empty input or q outside (0, 1).
    """
    if not 0 < q < 1:
        raise ValueError(f"Quantile must lie in (0, 1), got {q}")
    if len(delays) == 0:
        raise ValueError("Cannot take a percentile of no delays")
    ordered = np.sort(np.asarray(delays))
    rank = math.ceil(round(q * len(ordered), 9))
    return float(ordered[max(rank, 1) - 1])


def stability_probe(backlog_trace: Sequence[Tuple[int, float]]) -> bool:
    """
    True iff total backlog stops growing.

    Fits a least-squares line to the last half of the (slot, backlog) trace and
    compares the slope with 1e-3 packets per slot.

    Raises:
        ValueError: If the trace has fewer than 10 samples.
    """
    if len(backlog_trace) < 10:
        raise ValueError(f"Stability probe needs at least 10 samples, got {len(backlog_trace)}")
    half = np.asarray(backlog_trace[len(backlog_trace) // 2 :], dtype=float)
    fit = stats.linregress(half[:, 0], half[:, 1])
    return bool(fit.slope <= STABILITY_SLOPE)


class DelayCollector:
    """Accumulates packet and coflow delays of the coflows that count toward the metrics"""

    def __init__(self):
        self.packet_delay_sum = 0
        self.packets = 0
        self.coflow_delays: List[int] = []
        self.empty_coflows = 0
        self.voq_wait_sum = 0
        self.voq_batches = 0

    def add_packet(self, delay: int) -> None:
        self.packet_delay_sum += delay
        self.packets += 1

    def add_coflow(self, coflow: Coflow) -> None:
        if not coflow.demand.any():
            self.empty_coflows += 1
            return
        self.coflow_delays.append(coflow_delay(coflow))

    def add_voq_wait(self, wait: int) -> None:
        """Records the slots a batch waited in its VOQ before its first packet left"""
        self.voq_wait_sum += wait
        self.voq_batches += 1

    @property
    def completed(self) -> int:
        return len(self.coflow_delays) + self.empty_coflows

    def mean_coflow_delay(self) -> Optional[float]:
        return float(np.mean(self.coflow_delays)) if self.coflow_delays else None

    def mean_packet_delay(self) -> Optional[float]:
        return self.packet_delay_sum / self.packets if self.packets else None

    def mean_voq_wait(self) -> Optional[float]:
        return self.voq_wait_sum / self.voq_batches if self.voq_batches else None

    def percentiles(self, quantiles: Sequence[float]) -> Dict[float, float]:
        if not self.coflow_delays:
            return {}
        return {q: percentile(self.coflow_delays, q) for q in quantiles}
