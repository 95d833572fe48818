import typing


import numpy as np
from pydantic import BaseModel, ConfigDict, Field


from curloc.errors import InputError
from curloc.geometry import Box, iou

# 0.50, 0.55, ..., 0.95
MAP_THRESHOLDS = np.round(0.5 + 0.05 * np.arange(10), 2)


class PredictionRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str = Field(description="Sample identifier, unique within a file.")
    pred: Box
    gt: Box

    @property
    def iou(self) -> float:
        return iou(self.pred, self.gt)


def _ious(records: typing.Sequence[PredictionRecord]) -> np.ndarray:
    if len(records) == 0:
        raise InputError("No prediction records to evaluate")
    return np.array([record.iou for record in records])


def accuracy_at(
    records: typing.Sequence[PredictionRecord], tau: float
) -> float:
    """Fraction of records whose IoU reaches tau."""
    ious = _ious(records)
    return int(np.count_nonzero(ious >= tau)) / len(ious)


def pseudo_map(records: typing.Sequence[PredictionRecord]) -> float:
    """Mean accuracy over the ten thresholds 0.50 to 0.95."""
    ious = _ious(records)
    hits = sum(
        int(np.count_nonzero(ious >= tau)) for tau in MAP_THRESHOLDS
    )
    return hits / (len(MAP_THRESHOLDS) * len(ious))


def summarize(
    records: typing.Sequence[PredictionRecord],
) -> dict[str, float]:
    return {
        "a50": accuracy_at(records, 0.5),
        "a80": accuracy_at(records, 0.8),
        "map": pseudo_map(records),
    }
