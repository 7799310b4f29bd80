"""Scheduler lib policy and builder Test"""
import numpy as np
import pytest

from src.engine.lib.config import PolicyConfig
from src.engine.lib.state import SwitchState
from src.scheduler.lib.builder import build_policy, resolve_mode
from src.scheduler.lib.cab import CabScheduler
from src.scheduler.lib.policy import (
    MaxWeightScheduler,
    PeriodicScheduler,
    RandomizedScheduler,
    bvn_cycle,
)
from src.switch.lib.matching import Matching, bvn_decompose, is_feasible
from src.switch.lib.traffic import CoflowModel
from src.tuning.lib.params import CabParameters


def test_bvn_cycle_rounds_to_period():
    """Test bvn_cycle hands out round(p_k * period) slots with largest remainders"""
    terms = [(0.5, Matching([0, 1])), (0.3, Matching([1, 0])), (0.2, Matching([0, 1]))]
    assert bvn_cycle(terms, 10) == [5, 3, 2]
    thirds = [(1 / 3, Matching([0])), (1 / 3, Matching([0])), (1 / 3, Matching([0]))]
    assert bvn_cycle(thirds, 10) == [4, 3, 3]
    with pytest.raises(ValueError):
        bvn_cycle(terms, 0)


def test_randomized_uniform_is_a_permutation():
    """Test the uniform randomized scheduler draws full permutations"""
    policy = RandomizedScheduler(5, np.random.default_rng(0))
    for slot in range(20):
        matching = policy.decide(slot, None)
        assert is_feasible(matching)
        assert sorted(matching.assign.tolist()) == list(range(5))


def test_randomized_uniform_pair_frequencies():
    """Test every input-output pair is matched in about 1/n of the slots"""
    policy = RandomizedScheduler(8, np.random.default_rng(12))
    counts = np.zeros((8, 8))
    for slot in range(100_000):
        counts[np.arange(8), policy.decide(slot, None).assign] += 1
    np.testing.assert_allclose(counts / 100_000, 1 / 8, atol=0.005)


def test_randomized_bvn_samples_terms():
    """Test the BvN randomized scheduler only returns decomposition terms or idle"""
    rate = np.array([[0.4, 0.1], [0.1, 0.4]])
    policy = RandomizedScheduler(2, np.random.default_rng(1), mode="bvn", rate=rate)
    allowed = [m for _, m in bvn_decompose(rate)] + [Matching.idle(2)]
    for slot in range(50):
        assert any(policy.decide(slot, None) == m for m in allowed)
    with pytest.raises(ValueError):
        RandomizedScheduler(2, mode="bvn")
    with pytest.raises(ValueError):
        RandomizedScheduler(2, mode="weighted")


def test_periodic_uniform_serves_every_pair_once_per_cycle():
    """Test the uniform periodic scheduler visits every VOQ once every n slots"""
    n = 4
    policy = PeriodicScheduler(n)
    total = sum(policy.decide(slot, None).to_matrix() for slot in range(n))
    np.testing.assert_array_equal(total, np.ones((n, n)))
    assert policy.decide(0, None) == Matching([1, 2, 3, 0])
    assert policy.decide(n, None) == policy.decide(0, None)


def test_periodic_bvn_cycle_length():
    """Test the BvN periodic scheduler repeats a cycle of `period` slots"""
    rate = np.array([[0.5, 0.25], [0.25, 0.5]])
    policy = PeriodicScheduler(2, mode="bvn", rate=rate, period=8)
    assert len(policy.cycle) == 8
    assert policy.decide(3, None) == policy.decide(11, None)
    served = sum(policy.decide(slot, None).to_matrix() for slot in range(8)) / 8
    assert (served >= rate - 1 / 8).all()


def test_max_weight_scheduler_uses_voq_lengths():
    """Test the MWM scheduler picks the heaviest VOQ matching"""
    state = SwitchState(2)
    state.voq[:] = [[0, 4], [3, 0]]
    assert MaxWeightScheduler(2).decide(0, state) == Matching([1, 0])


def test_default_choose_packet_is_fifo():
    """Test the base packet choice serves the oldest coflow"""
    policy = MaxWeightScheduler(2)
    assert policy.choose_packet(0, 0, []) is None
    assert policy.stats() == {}


def test_resolve_mode():
    """Test auto mode picks uniform permutations only for uniform traffic"""
    uniform = CoflowModel(n=3, lam=0.1)
    diagonal = CoflowModel(n=3, lam=0.1, placement="diagonal")
    assert resolve_mode(PolicyConfig(name="randomized"), uniform) == "uniform"
    assert resolve_mode(PolicyConfig(name="randomized"), diagonal) == "bvn"
    assert resolve_mode(PolicyConfig(name="periodic", mode="bvn"), uniform) == "bvn"


def test_build_policy():
    """Test build_policy returns the configured scheduler"""
    model = CoflowModel(n=3, lam=0.1, beta=2.0)
    rng = np.random.default_rng(0)
    assert isinstance(build_policy(PolicyConfig(name="randomized"), model, rng), RandomizedScheduler)
    assert isinstance(build_policy(PolicyConfig(name="periodic"), model, rng), PeriodicScheduler)
    assert isinstance(build_policy(PolicyConfig(name="mwm"), model, rng), MaxWeightScheduler)
    cab = build_policy(PolicyConfig(name="cab", frame_size=12), model, rng)
    assert isinstance(cab, CabScheduler) and cab.frame_size == 12
    tuned = build_policy(PolicyConfig(name="cab"), model, rng, params=CabParameters(0.1, 1e-4, 30))
    assert tuned.frame_size == 30 and tuned.gamma == 0.1 and tuned.delta == 1e-4


def test_build_policy_errors():
    """Test build_policy needs CAB parameters and a known policy"""
    model = CoflowModel(n=3, lam=0.1)
    with pytest.raises(ValueError):
        build_policy(PolicyConfig(name="cab"), model)
    config = PolicyConfig(name="mwm")
    object.__setattr__(config, "name", "fifo")
    with pytest.raises(ValueError):
        build_policy(config, model)
