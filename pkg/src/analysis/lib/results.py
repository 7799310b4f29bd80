"""CSV schema of run results, with byte-stable read and write helpers"""
import math
import pathlib
from typing import Any, Dict, Iterable, List, Union

import pandas as pd

from src.engine.lib.config import SimConfig
from src.engine.lib.metrics import MetricsRecord

SCHEMA = {
    "policy": "str",
    "n": "int",
    "lambda": "float",
    "beta": "float",
    "rho": "float",
    "seed": "int",
    "horizon": "int",
    "warmup": "int",
    "frame_size": "int",
    "gamma": "float",
    "delta": "float",
    "sctf": "bool",
    "dynamic_frames": "bool",
    "completed": "int",
    "mean_coflow_delay": "float",
    "p999_coflow_delay": "float",
    "mean_packet_delay": "float",
    "dilation": "float",
    "eta": "float",
    "overflow_freq": "float",
    "stable": "bool",
    "status": "str",
    "mean_voq_wait": "float",
    "max_conforming_delay": "int",
    "conforming_violations": "int",
    "mean_nonconforming_service": "float",
    "error": "str",
}
COLUMNS = list(SCHEMA)


def record_to_row(record: MetricsRecord) -> Dict[str, Any]:
    """Flattens a MetricsRecord into one CSV row"""
    return {
        "policy": record.policy,
        "n": record.n,
        "lambda": record.lam,
        "beta": record.beta,
        "rho": record.rho,
        "seed": record.seed,
        "horizon": record.horizon,
        "warmup": record.warmup,
        "frame_size": record.frame_size,
        "gamma": record.gamma,
        "delta": record.delta,
        "sctf": record.sctf,
        "dynamic_frames": record.dynamic_frames,
        "completed": record.completed_coflows,
        "mean_coflow_delay": record.mean_coflow_delay,
        "p999_coflow_delay": record.coflow_delay_percentiles.get(0.999),
        "mean_packet_delay": record.mean_packet_delay,
        "dilation": record.dilation_factor,
        "eta": record.eta_nonconforming,
        "overflow_freq": record.overflow_frequency,
        "stable": record.stable,
        "status": record.status,
        "mean_voq_wait": record.mean_voq_wait,
        "max_conforming_delay": record.max_conforming_delay,
        "conforming_violations": record.conforming_violations,
        "mean_nonconforming_service": record.mean_nonconforming_service,
        "error": record.error,
    }


def error_row(config: SimConfig, error: Exception) -> Dict[str, Any]:
    """Row of a failed run: the configuration echo, status=error and empty metrics"""
    return {
        "policy": config.policy.name,
        "n": config.model.n,
        "lambda": config.model.lam,
        "beta": config.model.beta,
        "rho": config.model.rho,
        "seed": config.seed,
        "horizon": config.horizon_slots,
        "warmup": config.warmup_slots,
        "frame_size": config.policy.frame_size,
        "sctf": config.policy.sctf,
        "dynamic_frames": config.policy.dynamic_frames,
        "status": "error",
        "error": " ".join(f"{type(error).__name__}: {error}".split()),
    }


def format_value(value: Any, kind: str) -> str:
    """Renders one cell; missing values become the empty string"""
    if value is None or (not isinstance(value, str) and pd.isna(value)):
        return ""
    if kind == "int":
        return str(int(value))
    if kind == "float":
        value = float(value)
        return "" if math.isnan(value) else repr(value)
    if kind == "bool":
        return "True" if bool(value) else "False"
    return str(value)


def to_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    """String DataFrame with every schema column, in schema order"""
    formatted = [{col: format_value(row.get(col), SCHEMA[col]) for col in COLUMNS} for row in rows]
    return pd.DataFrame(formatted, columns=COLUMNS, dtype=str)


def rows_to_csv(rows: Iterable[Dict[str, Any]], header: bool = True) -> str:
    """CSV text of `rows`"""
    return to_frame(rows).to_csv(index=False, header=header, lineterminator="\n")


def write_rows(path: Union[str, pathlib.Path], rows: Iterable[Dict[str, Any]]) -> None:
    """
    Appends rows to a CSV file, writing the header only when the file is new or empty.

    Args:
        path: Destination CSV.
        rows: Dicts keyed by schema columns; missing keys become empty cells.
    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fresh = not path.exists() or path.stat().st_size == 0
    to_frame(rows).to_csv(path, mode="a", index=False, header=fresh, lineterminator="\n")


def _parse(value: str, kind: str):
    if value == "":
        return None
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    if kind == "bool":
        return value == "True"
    return value


def read_rows(path: Union[str, pathlib.Path]) -> List[Dict[str, Any]]:
    """
    Reads a results CSV back into typed row dicts (empty cells become None).

    Raises:
        ValueError: If the header does not match the schema.
    """
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(frame.columns) != COLUMNS:
        raise ValueError(f"Unexpected results header in {path}: {list(frame.columns)}")
    return [{col: _parse(row[col], SCHEMA[col]) for col in COLUMNS} for row in frame.to_dict("records")]


def rows_to_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    """Typed DataFrame for grouping and fitting; missing values are NaN"""
    frame = pd.DataFrame(list(rows), columns=COLUMNS)
    for col, kind in SCHEMA.items():
        if kind in ("int", "float"):
            frame[col] = pd.to_numeric(frame[col], errors="coerce")
    return frame
