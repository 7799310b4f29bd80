"""Builder module as interface to building scheduling policies"""
from typing import Optional

import numpy as np

from src.engine.lib.config import PolicyConfig
from src.scheduler.lib.base import SchedulerPolicy
from src.scheduler.lib.cab import CabScheduler
from src.scheduler.lib.policy import MaxWeightScheduler, PeriodicScheduler, RandomizedScheduler
from src.switch.lib.traffic import CoflowModel
from src.tuning.lib.params import CabParameters


def resolve_mode(config: PolicyConfig, model: CoflowModel) -> str:
    """Uniform permutations for uniform traffic, BvN otherwise, unless the config says which"""
    if config.mode != "auto":
        return config.mode
    if model.placement == "uniform" and model.mean_matrix is None:
        return "uniform"
    return "bvn"


def build_policy(
    config: PolicyConfig,
    model: CoflowModel,
    rng: Optional[np.random.Generator] = None,
    params: Optional[CabParameters] = None,
    count_from_slot: int = 0,
) -> SchedulerPolicy:
    """
    Builds a scheduling policy.

    Args:
        config: Policy selection and parameters.
        model: Traffic model, used for the port count and the BvN rate matrix.
        rng: Stream for randomized decisions.
        params: Tuned CAB parameters, used when config.frame_size is None.
        count_from_slot: First slot whose CAB frames enter the stats.

    Returns:
        A SchedulerPolicy ready to be driven by the simulator.

    Raises:
        ValueError: If the specified configuration is invalid.
    """
    n = model.n
    if config.name == "randomized":
        mode = resolve_mode(config, model)
        rate = model.rate_matrix() if mode == "bvn" else None
        return RandomizedScheduler(n, rng, mode=mode, rate=rate)

    if config.name == "periodic":
        mode = resolve_mode(config, model)
        rate = model.rate_matrix() if mode == "bvn" else None
        return PeriodicScheduler(n, rng, mode=mode, rate=rate, period=config.period)

    if config.name == "mwm":
        return MaxWeightScheduler(n, rng)

    if config.name == "cab":
        if config.frame_size is not None:
            return CabScheduler(
                n,
                config.frame_size,
                rng,
                sctf=config.sctf,
                dynamic_frames=config.dynamic_frames,
                count_from_slot=count_from_slot,
            )
        if params is None:
            raise ValueError("CAB needs either a frame_size or tuned parameters")
        return CabScheduler(
            n,
            params.frame_size,
            rng,
            sctf=config.sctf,
            dynamic_frames=config.dynamic_frames,
            gamma=params.gamma,
            delta=params.delta,
            count_from_slot=count_from_slot,
        )

    raise ValueError(f"Invalid policy: {config.name}")
