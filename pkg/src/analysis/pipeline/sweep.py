"""Parameter sweeps over port counts, loads or policies, and the reports built from their rows"""
import math
import pathlib
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Dict, List, NamedTuple, Union

import pandas as pd
from tqdm import tqdm

sys.path.append(pathlib.Path.cwd().as_posix())
from src.analysis.lib.results import (  # pylint: disable=wrong-import-position
    error_row,
    record_to_row,
    rows_to_frame,
    write_rows,
)
from src.analysis.lib.scaling import MIN_GRID_POINTS, fit_scaling  # pylint: disable=wrong-import-position
from src.engine.lib.config import ExperimentPlan, SimConfig  # pylint: disable=wrong-import-position
from src.engine.pipeline.simulate import run  # pylint: disable=wrong-import-position


class SweepPoint(NamedTuple):
    """One run of a sweep, identified by its position in the plan"""

    grid_index: int
    policy_index: int
    replication: int
    kind: str
    value: Union[int, float, str]
    policy: str
    seed: int
    base: SimConfig


def plan_points(plan: ExperimentPlan) -> List[SweepPoint]:
    """
    Expands a plan into its runs, ordered by (grid index, policy index, seed).

    A "policy" sweep runs each grid entry as the policy of its point.
    """
    points = []
    for grid_index, value in enumerate(plan.grid):
        policies = [value] if plan.kind == "policy" else plan.policies
        for policy_index, policy in enumerate(policies):
            for replication in range(plan.replications):
                points.append(
                    SweepPoint(
                        grid_index,
                        policy_index,
                        replication,
                        plan.kind,
                        value,
                        policy,
                        plan.base.seed + replication,
                        plan.base,
                    )
                )
    return points


def point_config(point: SweepPoint) -> SimConfig:
    """SimConfig of one sweep point: the base with the swept value, policy and seed applied"""
    base = point.base
    model = base.model
    if point.kind == "n":
        model = replace(model, n=point.value)
    elif point.kind == "rho":
        if model.port_mean == 0:
            raise ValueError("Cannot sweep rho over traffic that carries no packets")
        model = replace(model, lam=point.value / model.port_mean)
    policy = replace(base.policy, name=point.policy)
    return replace(base, model=model, policy=policy, seed=point.seed)


def run_point(point: SweepPoint) -> Dict[str, Any]:
    """Runs one point; a failure becomes a status=error row instead of an exception"""
    try:
        config = point_config(point)
    except Exception as error:  # pylint: disable=broad-except
        row = error_row(point.base, error)
        row.update(policy=point.policy, seed=point.seed)
        return row
    try:
        return record_to_row(run(config))
    except Exception as error:  # pylint: disable=broad-except
        return error_row(config, error)


def sweep(plan: ExperimentPlan, progress: bool = False) -> List[Dict[str, Any]]:
    """
    Runs every point of a plan and appends the rows to `plan.output` when set.

    Rows come back in plan order whatever the number of workers, so a sweep
    with fixed seeds writes the same bytes on every invocation.

    Args:
        plan (ExperimentPlan): Sweep description.
        progress (bool): Show a tqdm bar over the points.

    Returns:
        List[Dict[str, Any]]: One row per point.
    """
    points = plan_points(plan)
    bar = dict(total=len(points), desc=f"Sweeping {plan.kind}", disable=not progress)
    if plan.workers == 1:
        rows = [run_point(point) for point in tqdm(points, **bar)]
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as executor:
            rows = list(tqdm(executor.map(run_point, points), **bar))
    if plan.output is not None:
        write_rows(plan.output, rows)
    return rows


def _ok_frame(rows) -> pd.DataFrame:
    frame = rows_to_frame(rows)
    return frame[frame["status"] == "ok"]


def dilation_report(rows) -> List[Dict[str, Any]]:
    """
    Dilation factor per (policy, n): mean over seeds and its standard error.

    Raises:
        ValueError: If a successful row lacks a coflow or packet delay mean.
    """
    frame = _ok_frame(rows)
    missing = frame["mean_packet_delay"].isna() | frame["mean_coflow_delay"].isna()
    if missing.any():
        raise ValueError(f"{int(missing.sum())} rows have no packet or coflow delay, cannot compute dilation")
    frame = frame.assign(ratio=frame["mean_coflow_delay"] / frame["mean_packet_delay"])
    report = []
    for (policy, n), group in frame.groupby(["policy", "n"], sort=True):
        ratios = group["ratio"].to_numpy()
        stderr = float(ratios.std(ddof=1) / math.sqrt(ratios.size)) if ratios.size > 1 else 0.0
        report.append(
            {
                "policy": policy,
                "n": int(n),
                "seeds": int(ratios.size),
                "dilation_mean": float(ratios.mean()),
                "dilation_stderr": stderr,
            }
        )
    return report


def trend_report(rows) -> List[Dict[str, Any]]:
    """
    Per policy regressions of the seed-averaged mean coflow delay on log n.

    Two fits per policy: "delay" (delay vs log n) and "delay_per_n"
    (delay / n vs log n). Policies with fewer than three port counts are skipped.
    """
    frame = _ok_frame(rows).dropna(subset=["mean_coflow_delay"])
    report = []
    for policy, group in frame.groupby("policy", sort=True):
        means = group.groupby("n")["mean_coflow_delay"].mean().sort_index()
        if means.size < MIN_GRID_POINTS:
            continue
        grid = means.index.to_numpy(dtype=float)
        for target, values in (("delay", means.to_numpy()), ("delay_per_n", means.to_numpy() / grid)):
            fit = fit_scaling(grid, values, "log-linear")
            report.append(
                {
                    "policy": policy,
                    "target": target,
                    "points": int(means.size),
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "r_squared": fit.r_squared,
                }
            )
    return report


def report_to_csv(report: List[Dict[str, Any]]) -> str:
    """CSV text of a report"""
    return pd.DataFrame(report).to_csv(index=False, lineterminator="\n")
