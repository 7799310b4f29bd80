"""Engine lib config Test"""
import pathlib

import numpy as np
import pytest

from src.engine.lib.config import (
    ExperimentPlan,
    MetricsConfig,
    PolicyConfig,
    SimConfig,
    dump_sim_config,
    load_experiment_plan,
    load_sim_config,
    sim_config_from_dict,
    sim_config_to_dict,
)
from src.switch.lib.traffic import CoflowModel


def test_policy_config_validation():
    """Test PolicyConfig rejects unknown policies, short frames and bad modes"""
    with pytest.raises(ValueError):
        PolicyConfig(name="fifo")
    with pytest.raises(ValueError):
        PolicyConfig(frame_size=1)
    with pytest.raises(ValueError):
        PolicyConfig(mode="greedy")
    config = PolicyConfig(frame_size=12.0)
    assert config.frame_size == 12 and isinstance(config.frame_size, int)
    with pytest.raises(ValueError):
        config.period = 0


def test_metrics_config_validation():
    """Test MetricsConfig keeps quantiles inside (0, 1)"""
    assert MetricsConfig(percentiles=["0.5"]).percentiles == [0.5]
    with pytest.raises(ValueError):
        MetricsConfig(percentiles=[1.0])
    with pytest.raises(ValueError):
        MetricsConfig(trace_samples=3)


def test_sim_config_warmup_default():
    """Test the warmup defaults to a tenth of the horizon and must stay below it"""
    model = CoflowModel(n=4, lam=0.1)
    assert SimConfig(model=model, horizon_slots=5000).warmup_slots == 500
    with pytest.raises(ValueError):
        SimConfig(model=model, horizon_slots=100, warmup_slots=100)
    with pytest.raises(ValueError):
        SimConfig(model=model, seed=-1)
    assert SimConfig(model=model).n == 4


def test_experiment_plan_validation():
    """Test ExperimentPlan checks its grid against the sweep kind"""
    base = SimConfig(model=CoflowModel(n=4, lam=0.1))
    assert ExperimentPlan(base=base, kind="n", grid=[16.0, 32]).grid == [16, 32]
    assert ExperimentPlan(base=base, kind="rho", grid=["0.5"]).grid == [0.5]
    with pytest.raises(ValueError):
        ExperimentPlan(base=base, kind="n", grid=[])
    with pytest.raises(ValueError):
        ExperimentPlan(base=base, kind="n", grid=[0])
    with pytest.raises(ValueError):
        ExperimentPlan(base=base, kind="policy", grid=["fifo"])
    with pytest.raises(ValueError):
        ExperimentPlan(base=base, grid=[4], replications=0)
    with pytest.raises(ValueError):
        ExperimentPlan(base=base, grid=[4], policies=[])


def test_sim_config_dict_round_trip():
    """Test sim_config_from_dict inverts sim_config_to_dict"""
    config = SimConfig(
        model=CoflowModel(n=3, lam=0.2, beta=2.0, placement="diagonal", family="powerlaw", epsilon=1.5),
        policy=PolicyConfig(name="periodic", mode="bvn", period=50),
        horizon_slots=3000,
        seed=9,
        metrics=MetricsConfig(percentiles=[0.9, 0.99]),
    )
    data = sim_config_to_dict(config)
    assert data["traffic"]["lambda"] == 0.2
    assert data["traffic"]["flow_size"] == {"family": "powerlaw", "epsilon": 1.5}
    assert sim_config_to_dict(sim_config_from_dict(data)) == data


def test_toml_file_round_trip(fs):  # pylint: disable=invalid-name
    """Test dump_sim_config and load_sim_config with a mocked filesystem"""
    means = np.array([[1.0, 0.5], [0.0, 2.0]])
    config = SimConfig(model=CoflowModel(n=2, lam=0.1, mean_matrix=means), horizon_slots=1000, seed=4)
    path = pathlib.Path("configs") / "run.toml"
    dump_sim_config(config, path)
    assert fs.exists(path)
    loaded = load_sim_config(path)
    np.testing.assert_allclose(loaded.model.mean_matrix, means)
    assert loaded.model.port_mean == pytest.approx(2.5)
    assert loaded.horizon_slots == 1000 and loaded.warmup_slots == 100 and loaded.seed == 4


def test_load_experiment_plan(fs):  # pylint: disable=invalid-name
    """Test load_experiment_plan reads the [sweep] table next to the run tables"""
    fs.create_file(
        "plan.toml",
        contents="""
[traffic]
n = 16
lambda = 0.3
beta = 2.5

[traffic.flow_size]
family = "geometric"

[policy]
name = "cab"
sctf = true

[run]
horizon = 100000
seed = 3

[sweep]
kind = "n"
grid = [16, 32, 64]
policies = ["cab", "randomized"]
replications = 5
output = "results/sweep.csv"
""",
    )
    plan = load_experiment_plan("plan.toml")
    assert plan.kind == "n"
    assert plan.grid == [16, 32, 64]
    assert plan.policies == ["cab", "randomized"]
    assert plan.replications == 5
    assert plan.output == "results/sweep.csv"
    assert plan.base.policy.sctf is True
    assert plan.base.model.lam == pytest.approx(0.3)
    assert plan.base.warmup_slots == 10_000
