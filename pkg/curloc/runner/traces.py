import math
import typing
from pathlib import Path


import pandas as pd


from curloc.errors import InputError
from curloc.simulation.training import MetricsRecord

TRACE_COLUMNS = [
    "step",
    "tau",
    "group_mean_reward",
    "window_mean_reward",
    "window_reward_std",
    "iou_margin",
    "group_mean_iou",
    "updated",
    "objective",
]

OPTIONAL_COLUMNS = ("window_mean_reward", "window_reward_std", "iou_margin")


def trace_frame(trace: typing.Sequence[MetricsRecord]) -> pd.DataFrame:
    rows = [record.model_dump() for record in trace]
    df = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    df["updated"] = df["updated"].astype(int)
    return df


def write_trace(
    path: str | Path, trace: typing.Sequence[MetricsRecord]
) -> None:
    """One CSV row per step; unavailable window metrics stay empty."""
    trace_frame(trace).to_csv(path, index=False, na_rep="")


def check_columns(path: str | Path, columns: typing.Sequence[str]) -> None:
    for position, expected in enumerate(TRACE_COLUMNS):
        if position >= len(columns):
            raise InputError(f"{path}: missing column '{expected}'")
        if columns[position] != expected:
            raise InputError(
                f"{path}: column {position} is '{columns[position]}', "
                f"expected '{expected}'"
            )
    if len(columns) > len(TRACE_COLUMNS):
        raise InputError(
            f"{path}: unexpected column '{columns[len(TRACE_COLUMNS)]}'"
        )


def read_trace_frame(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path, float_precision="round_trip")
    check_columns(path, list(df.columns))
    return df


def _optional(value: typing.Any) -> typing.Optional[float]:
    value = float(value)
    return None if math.isnan(value) else value


def read_trace(path: str | Path) -> list[MetricsRecord]:
    df = read_trace_frame(path)
    records: list[MetricsRecord] = []
    for row in df.itertuples(index=False):
        updated = int(row.updated)
        if updated not in (0, 1):
            raise InputError(
                f"{path}: step {row.step}: column 'updated' must be 0 or 1"
            )
        records.append(
            MetricsRecord(
                step=int(row.step),
                tau=float(row.tau),
                group_mean_reward=float(row.group_mean_reward),
                window_mean_reward=_optional(row.window_mean_reward),
                window_reward_std=_optional(row.window_reward_std),
                iou_margin=_optional(row.iou_margin),
                group_mean_iou=float(row.group_mean_iou),
                updated=bool(updated),
                objective=float(row.objective),
            )
        )

    steps = [record.step for record in records]
    if any(later <= earlier for earlier, later in zip(steps, steps[1:])):
        raise InputError(f"{path}: column 'step' is not strictly increasing")
    return records
