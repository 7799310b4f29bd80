"""Switch lib traffic Test"""
import math

import numpy as np
import pytest

from src.switch.lib.traffic import (
    Coflow,
    CoflowModel,
    Deterministic,
    Geometric,
    PowerLaw,
    aggregate,
    as_traffic_matrix,
    clearance_time,
    sample_arrivals,
    sample_demand,
    sample_flow_size,
    sample_frame_aggregates,
)


def test_clearance_time_examples():
    """Test clearance_time is the largest row or column sum"""
    assert clearance_time([[2, 1], [1, 2]]) == 3
    assert clearance_time([[0, 5], [0, 0]]) == 5
    assert clearance_time(np.zeros((4, 4), dtype=int)) == 0
    assert clearance_time(np.diag([1, 7, 2])) == 7


def test_as_traffic_matrix_rejects_bad_input():
    """Test as_traffic_matrix rejects non-square, negative, fractional and mis-sized matrices"""
    with pytest.raises(ValueError):
        as_traffic_matrix([[1, 2, 3], [4, 5, 6]])
    with pytest.raises(ValueError):
        as_traffic_matrix([[1, -1], [0, 0]])
    with pytest.raises(ValueError):
        as_traffic_matrix([[0.5, 0], [0, 0]])
    with pytest.raises(ValueError):
        as_traffic_matrix([[1, 0], [0, 1]], n=3)
    assert as_traffic_matrix([[1.0, 0.0], [0.0, 2.0]]).dtype == np.int64


def test_aggregate_sums_coflows_and_matrices():
    """Test aggregate adds Coflow demands and raw matrices element-wise"""
    first = Coflow(id=0, arrival_slot=0, demand=[[1, 0], [0, 2]])
    total = aggregate([first, [[0, 3], [1, 0]]])
    np.testing.assert_array_equal(total, [[1, 3], [1, 2]])
    np.testing.assert_array_equal(aggregate([], n=3), np.zeros((3, 3)))


def test_aggregate_errors():
    """Test aggregate refuses an empty list without n and mismatched shapes"""
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([np.zeros((2, 2), dtype=int), np.zeros((3, 3), dtype=int)])


def test_coflow_tracks_remaining_packets():
    """Test Coflow derives its remaining packets and clearance time from the demand"""
    coflow = Coflow(id=4, arrival_slot=9, demand=[[2, 1], [1, 2]])
    assert coflow.remaining_total == 6
    assert coflow.clearance == 3
    assert coflow.n == 2
    assert not coflow.is_complete
    assert Coflow(id=5, arrival_slot=0, demand=np.zeros((2, 2))).is_complete


def test_geometric_moments_and_sampling():
    """Test Geometric sampling matches its mean on {0, 1, ...}"""
    dist = Geometric(2.5)
    assert dist.p == pytest.approx(2.5 / 3.5)
    assert dist.variance == pytest.approx(2.5 * 3.5)
    assert dist.mgf(0.0) == pytest.approx(1.0)
    assert dist.mgf(dist.mgf_domain) == math.inf
    draws = dist.sample(np.random.default_rng(3), 200_000)
    assert draws.min() == 0
    assert draws.mean() == pytest.approx(2.5, abs=0.05)


def test_powerlaw_tail():
    """Test PowerLaw has P[X >= k] = k^-(1 + epsilon)"""
    dist = PowerLaw(1.0)
    draws = dist.sample(np.random.default_rng(11), 200_000)
    assert draws.min() >= 1
    assert np.mean(draws >= 2) == pytest.approx(0.25, abs=0.01)
    assert np.mean(draws >= 4) == pytest.approx(1 / 16, abs=0.005)
    assert dist.mean == pytest.approx(math.pi**2 / 6)
    assert dist.variance == math.inf
    assert math.isfinite(PowerLaw(2.0).variance)


def test_flow_size_laws_validate():
    """Test flow size laws reject invalid parameters"""
    with pytest.raises(ValueError):
        Geometric(0)
    with pytest.raises(ValueError):
        PowerLaw(0)
    with pytest.raises(ValueError):
        Deterministic(1.5)
    assert sample_flow_size(Deterministic(3), np.random.default_rng(0)) == 3


def test_coflow_model_load():
    """Test rho is lam times the busiest port's mean load"""
    model = CoflowModel(n=4, lam=0.3, beta=2.5)
    assert model.port_mean == pytest.approx(2.5)
    assert model.rho == pytest.approx(0.75)
    np.testing.assert_allclose(model.rate_matrix(), np.full((4, 4), 0.3 * 2.5 / 4))
    assert model.port_load_variance() == pytest.approx(4 * 0.625 * 1.625)

    diagonal = CoflowModel(n=4, lam=0.2, beta=2.0, placement="diagonal")
    np.testing.assert_allclose(diagonal.expected_demand(), np.diag([2.0] * 4))
    assert diagonal.rho == pytest.approx(0.4)


def test_coflow_model_mean_matrix():
    """Test a mean matrix sets beta to its largest line sum"""
    means = np.array([[1.0, 0.5], [0.0, 2.0]])
    model = CoflowModel(n=2, lam=0.1, mean_matrix=means)
    assert model.port_mean == pytest.approx(2.5)
    assert model.entry_distribution(1, 0).mean == 0.0
    assert model.entry_distribution(0, 1).mean == pytest.approx(0.5)


def test_coflow_model_validation():
    """Test CoflowModel rejects inconsistent parameters"""
    with pytest.raises(ValueError):
        CoflowModel(n=0, lam=0.1)
    with pytest.raises(ValueError):
        CoflowModel(n=4, lam=-0.1)
    with pytest.raises(ValueError):
        CoflowModel(n=4, lam=0.1, beta=2.5, family="deterministic")
    with pytest.raises(ValueError):
        CoflowModel(n=4, lam=0.1, family="powerlaw")
    with pytest.raises(ValueError):
        CoflowModel(n=4, lam=0.1, placement="ring")
    with pytest.raises(ValueError):
        CoflowModel(n=2, lam=0.1, mean_matrix=np.ones((3, 3)))
    model = CoflowModel(n=4, lam=0.1, beta=4.0, family="deterministic")
    assert model.entry_distribution(2, 3) == Deterministic(1)


def test_sample_demand_placement():
    """Test diagonal placement only fills the diagonal"""
    rng = np.random.default_rng(5)
    demand = sample_demand(CoflowModel(n=5, lam=0.1, beta=3.0, placement="diagonal"), rng)
    assert demand.shape == (5, 5)
    assert not (demand - np.diag(np.diag(demand))).any()
    dense = sample_demand(CoflowModel(n=3, lam=0.1, beta=3.0, family="deterministic"), rng)
    np.testing.assert_array_equal(dense, np.ones((3, 3)))


def test_sample_arrivals_ids_and_slots():
    """Test arrivals carry consecutive ids and the current slot"""
    model = CoflowModel(n=3, lam=5.0, beta=1.0)
    arrivals = sample_arrivals(model, 17, np.random.default_rng(2), next_id=40)
    assert len(arrivals) > 0
    assert [c.id for c in arrivals] == list(range(40, 40 + len(arrivals)))
    assert all(c.arrival_slot == 17 for c in arrivals)
    assert sample_arrivals(CoflowModel(n=3, lam=0.0), 0, np.random.default_rng(2)) == []


@pytest.mark.slow
def test_sample_arrivals_poisson_rate():
    """Test the arrival count per slot averages lam over a million slots"""
    model = CoflowModel(n=2, lam=0.3, beta=1.0)
    rng = np.random.default_rng(21)
    total = sum(len(sample_arrivals(model, slot, rng)) for slot in range(1_000_000))
    assert 0.2985 <= total / 1_000_000 <= 0.3015


def test_sample_demand_row_sum_mean():
    """Test uniform geometric demands put beta packets on every input on average"""
    model = CoflowModel(n=16, lam=0.1, beta=2.5)
    rng = np.random.default_rng(22)
    row_sums = np.array([sample_demand(model, rng).sum(axis=1) for _ in range(100_000)])
    assert row_sums.mean() == pytest.approx(2.5, rel=0.02)
    assert row_sums.mean(axis=0) == pytest.approx(np.full(16, 2.5), rel=0.05)


def test_sample_frame_aggregates_single_port_mean():
    """Test a one-port frame aggregate has mean lam T beta"""
    model = CoflowModel(n=1, lam=0.5, beta=2.0, placement="diagonal")
    taus = sample_frame_aggregates(model, 4, 50_000, np.random.default_rng(8))
    assert taus.shape == (50_000,)
    assert taus.mean() == pytest.approx(4.0, abs=0.1)


def test_sample_frame_aggregates_generic_path():
    """Test deterministic traffic frames are multiples of the per-port load"""
    model = CoflowModel(n=2, lam=0.5, beta=2.0, family="deterministic")
    taus = sample_frame_aggregates(model, 3, 500, np.random.default_rng(9))
    assert (taus % 2 == 0).all()
    assert (sample_frame_aggregates(CoflowModel(n=2, lam=0.0), 3, 10, np.random.default_rng(9)) == 0).all()
