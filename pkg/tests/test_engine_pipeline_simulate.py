"""Engine pipeline simulate Test"""
import numpy as np
import pytest

from src.analysis.lib.results import record_to_row
from src.engine.lib.config import MetricsConfig, PolicyConfig, SimConfig
from src.engine.lib.metrics import coflow_delay
from src.engine.pipeline.simulate import Simulator, run
from src.scheduler.lib.base import SchedulerPolicy
from src.switch.lib.errors import InfeasibleMatchingError, UnstableSystemError
from src.switch.lib.matching import Matching
from src.switch.lib.traffic import CoflowModel


class CollidingPolicy(SchedulerPolicy):
    """Sends every input to output 0"""

    name = "colliding"

    def decide(self, slot, state):
        return Matching(np.zeros(self.n, dtype=np.int64))


def _config(policy, horizon=1500, lam=0.1, beta=2.0, n=4, **kwargs):
    return SimConfig(
        model=CoflowModel(n=n, lam=lam, beta=beta),
        policy=policy,
        horizon_slots=horizon,
        seed=kwargs.pop("seed", 7),
        **kwargs,
    )


@pytest.mark.parametrize(
    "policy",
    [
        PolicyConfig(name="randomized"),
        PolicyConfig(name="periodic"),
        PolicyConfig(name="mwm"),
        PolicyConfig(name="cab", frame_size=40),
        PolicyConfig(name="cab", frame_size=40, sctf=True, dynamic_frames=True),
    ],
    ids=["randomized", "periodic", "mwm", "cab", "cab-heuristics"],
)
def test_policies_conserve_packets(policy):
    """Test every policy runs with per-slot conservation checks and completes coflows no faster than they clear"""
    simulator = Simulator(_config(policy, debug=True), keep_completed=True)
    record = simulator.run()
    assert all(coflow_delay(c) >= c.clearance for c in simulator.completed)
    assert record.status == "ok"
    assert record.completed_coflows > 0
    assert record.mean_coflow_delay >= 1
    assert record.mean_packet_delay >= 1
    assert record.dilation_factor > 0
    assert record.coflow_delay_percentiles[0.999] >= record.mean_coflow_delay


def test_cab_conforming_delay_bound():
    """Test no conforming coflow waits longer than two frames"""
    simulator = Simulator(_config(PolicyConfig(name="cab", frame_size=30), horizon=3000, lam=0.15), keep_completed=True)
    record = simulator.run()
    assert record.conforming_violations == 0
    assert record.max_conforming_delay <= 60
    assert all(c.completion_slot - c.arrival_slot + 1 <= 60 for c in simulator.completed if c.conforming)


def test_cab_auto_tunes_frame_size():
    """Test CAB without a frame size tunes (gamma, delta, T) from the traffic model"""
    simulator = Simulator(_config(PolicyConfig(name="cab"), horizon=200, lam=0.05, n=4))
    assert simulator.params is not None
    assert simulator.policy.frame_size == simulator.params.frame_size
    record = simulator.run()
    assert record.gamma == simulator.params.gamma
    assert record.delta == simulator.params.delta


def test_runs_are_deterministic():
    """Test identical configs and seeds give identical rows"""
    config = _config(PolicyConfig(name="randomized"), horizon=1000)
    first = record_to_row(run(config))
    second = record_to_row(run(config))
    assert first == second
    other = record_to_row(run(_config(PolicyConfig(name="randomized"), horizon=1000, seed=8)))
    assert other != first


def test_same_seed_replays_arrivals_across_policies():
    """Test two policies under one seed see the same arrivals"""
    randomized = Simulator(_config(PolicyConfig(name="randomized"), horizon=500))
    periodic = Simulator(_config(PolicyConfig(name="periodic"), horizon=500))
    randomized.run()
    periodic.run()
    assert randomized.state.arrived_packets == periodic.state.arrived_packets
    assert randomized.next_id == periodic.next_id


def test_stationary_metrics_refuse_overload():
    """Test stationary runs refuse rho >= 1 while non-stationary runs proceed"""
    with pytest.raises(UnstableSystemError):
        Simulator(_config(PolicyConfig(name="randomized"), lam=0.5, beta=2.0))
    config = _config(
        PolicyConfig(name="randomized"),
        horizon=400,
        lam=0.5,
        beta=2.0,
        metrics=MetricsConfig(stationary=False),
    )
    assert run(config).rho == pytest.approx(1.0)


def test_infeasible_matching_aborts():
    """Test a policy returning a colliding matching stops the run"""
    config = _config(PolicyConfig(name="mwm"), horizon=10)
    simulator = Simulator(config, policy=CollidingPolicy(4))
    with pytest.raises(InfeasibleMatchingError):
        simulator.step()


def test_empty_coflow_completes_on_arrival():
    """Test an all-zero coflow counts as completed without entering the delay mean"""
    config = SimConfig(model=CoflowModel(n=2, lam=0.0), policy=PolicyConfig(name="mwm"), horizon_slots=20, warmup_slots=0)
    simulator = Simulator(config, keep_completed=True)
    simulator.inject(np.zeros((2, 2), dtype=int), slot=3)
    record = simulator.run()
    assert record.completed_coflows == 1
    assert record.mean_coflow_delay is None
    assert simulator.completed[0].completion_slot == 3


def test_voq_wait_counts_slots_to_first_service():
    """Test the VOQ wait includes the slots spent waiting for the round-robin visit"""
    config = SimConfig(
        model=CoflowModel(n=4, lam=0.0),
        policy=PolicyConfig(name="periodic", mode="uniform"),
        horizon_slots=20,
        warmup_slots=0,
    )
    simulator = Simulator(config)
    first = np.zeros((4, 4), dtype=int)
    first[0, 0] = 2
    first[1, 2] = 1
    behind = np.zeros((4, 4), dtype=int)
    behind[0, 0] = 1
    simulator.inject(first, slot=0)
    simulator.inject(behind, slot=1)
    record = simulator.run()
    # (0, 0) is visited at slots 3, 7 and 11, (1, 2) at slot 0
    assert simulator.collector.voq_batches == 3
    assert record.mean_voq_wait == pytest.approx((3 + 0 + 10) / 3)


def test_inject_validates():
    """Test inject refuses past slots and wrong shapes"""
    simulator = Simulator(_config(PolicyConfig(name="mwm"), horizon=10))
    simulator.step()
    with pytest.raises(ValueError):
        simulator.inject([[1, 0], [0, 1]], slot=5)
    with pytest.raises(ValueError):
        simulator.inject(np.eye(4, dtype=int), slot=0)


def test_overflow_handle():
    """Test the simulator measures frame overflow on its own running policy"""
    simulator = Simulator(_config(PolicyConfig(name="cab", frame_size=10), horizon=500, lam=0.2))
    simulator.run_frames(3)
    assert simulator.state.slot == 30
    assert 0.0 <= simulator.measure_overflow(8, 200) <= 1.0
    assert simulator.policy.frame_size == 8
    assert simulator.state.slot == 30 + 8 * 200
    assert simulator.n == 4 and simulator.rho == pytest.approx(0.4)
    with pytest.raises(ValueError):
        Simulator(_config(PolicyConfig(name="mwm"), horizon=10)).run_frames(1)
    with pytest.raises(ValueError):
        Simulator(_config(PolicyConfig(name="mwm"), horizon=10)).measure_overflow(8, 1)


def test_measure_overflow_tracks_frame_size():
    """Test two-slot frames under overload overflow almost always while long frames at light load do not"""
    overloaded = _config(
        PolicyConfig(name="cab", frame_size=40), horizon=500, lam=2.0, metrics=MetricsConfig(stationary=False)
    )
    assert Simulator(overloaded).measure_overflow(2, 200) >= 0.9
    light = Simulator(_config(PolicyConfig(name="cab", frame_size=40), horizon=500, lam=0.05))
    assert light.measure_overflow(400, 10) <= 0.1



def test_backlog_trace_holds_window_means():
    """Test each trace entry is the mean backlog of its window"""
    config = SimConfig(
        model=CoflowModel(n=2, lam=0.0),
        policy=PolicyConfig(name="periodic", mode="uniform"),
        horizon_slots=100,
        warmup_slots=0,
        metrics=MetricsConfig(trace_samples=10),
    )
    simulator = Simulator(config)
    simulator.inject([[2, 0], [0, 0]], slot=0)
    record = simulator.run()
    # VOQ (0, 0) is served at slots 1 and 3: backlog 2, 1, 1, 0
    assert simulator.trace_every == 10
    assert record.backlog_trace[0] == (9, pytest.approx(0.4))
    assert [value for _, value in record.backlog_trace[1:]] == [0.0] * 9
    assert record.stable is True


def test_framed_trace_windows_span_whole_frames():
    """Test CAB trace windows are rounded up to a multiple of the frame"""
    simulator = Simulator(_config(PolicyConfig(name="cab", frame_size=7), horizon=1000))
    assert simulator.trace_every == 7
    record = simulator.run()
    assert len(record.backlog_trace) == 900 // 7
    slots = [slot for slot, _ in record.backlog_trace]
    assert all(later - earlier == 7 for earlier, later in zip(slots, slots[1:]))



def test_debug_conservation_check_catches_drift():
    """Test the conservation check fires when VOQ lengths drift"""
    simulator = Simulator(_config(PolicyConfig(name="mwm"), horizon=10))
    simulator.state.voq[0, 0] += 1
    with pytest.raises(AssertionError):
        simulator.state.check_conservation()


@pytest.mark.slow
def test_randomized_settles_below_capacity():
    """Test the randomized backlog settles at rho = 0.75 for most seeds"""
    model = CoflowModel(n=16, lam=0.3, beta=2.5)
    verdicts = [
        run(SimConfig(model=model, policy=PolicyConfig(name="randomized"), horizon_slots=100_000, seed=seed)).stable
        for seed in range(1, 6)
    ]
    assert sum(verdicts) >= 3, verdicts


@pytest.mark.slow
def test_cab_settles_below_capacity():
    """Test the tuned CAB backlog settles at rho = 0.75 over frame-aligned windows"""
    config = SimConfig(model=CoflowModel(n=16, lam=0.3, beta=2.5), policy=PolicyConfig(name="cab"), horizon_slots=1_000_000, seed=1)
    simulator = Simulator(config)
    assert simulator.trace_every % simulator.policy.frame_size == 0
    assert simulator.run().stable is True


@pytest.mark.slow
@pytest.mark.parametrize("name, frame_size", [("cab", 200), ("randomized", None)])
def test_backlog_grows_above_capacity(name, frame_size):
    """Test backlog keeps growing at rho = 1.05"""
    overloaded = SimConfig(
        model=CoflowModel(n=16, lam=0.42, beta=2.5),
        policy=PolicyConfig(name=name, frame_size=frame_size),
        horizon_slots=100_000,
        seed=1,
        metrics=MetricsConfig(stationary=False),
    )
    record = run(overloaded)
    assert record.rho == pytest.approx(1.05)
    assert record.stable is False
