import json
import logging
import math
import typing
from pathlib import Path


from curloc.errors import InputError
from curloc.evaluation.metrics import PredictionRecord
from curloc.geometry import Box

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("id", "pred", "gt")


def validate_box(name: str, value: typing.Any) -> typing.Optional[str]:
    if not isinstance(value, list):
        return f"{name} format is incorrect: expected list, got {type(value).__name__}"

    if len(value) != 4:
        return f"{name} needs 4 coordinates, got {len(value)}"

    for coord in value:
        if isinstance(coord, bool) or not isinstance(coord, (int, float)):
            return f"{name} coordinate is not a number: {coord!r}"
        if not math.isfinite(coord):
            return f"{name} coordinate is not finite: {coord!r}"
        if not 0.0 <= coord <= 1.0:
            return f"{name} coordinate outside [0, 1]: {coord!r}"

    x1, y1, x2, y2 = value
    if not (x1 < x2 and y1 < y2):
        return f"{name} has no area: {value}"

    return None


def validate_prediction(obj: typing.Any) -> typing.Optional[str]:
    """
    Check one decoded prediction line.

    Return an error message if the line does not follow the expected
    format, otherwise None.
    """
    if not isinstance(obj, dict):
        return f"expected a JSON object, got {type(obj).__name__}"

    missing = [field for field in REQUIRED_FIELDS if field not in obj]
    if missing:
        return f"missing fields: {', '.join(missing)}"

    unknown = sorted(set(obj) - set(REQUIRED_FIELDS))
    if unknown:
        return f"unknown fields: {', '.join(unknown)}"

    if not isinstance(obj["id"], (str, int)) or isinstance(obj["id"], bool):
        return f"id must be a string or integer, got {obj['id']!r}"

    return validate_box("pred", obj["pred"]) or validate_box("gt", obj["gt"])


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    records: list[PredictionRecord] = []
    seen: set[str] = set()

    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise InputError(
                    f"{path}:{line_no}: invalid JSON ({e})"
                ) from e

            error_message = validate_prediction(obj)
            if error_message:
                raise InputError(f"{path}:{line_no}: {error_message}")

            record_id = str(obj["id"])
            if record_id in seen:
                raise InputError(
                    f"{path}:{line_no}: duplicate id {record_id!r}"
                )
            seen.add(record_id)
            records.append(
                PredictionRecord(
                    id=record_id,
                    pred=Box.from_sequence(obj["pred"]),
                    gt=Box.from_sequence(obj["gt"]),
                )
            )

    if not records:
        raise InputError(f"{path}: no prediction records")

    logger.debug(f"Read {len(records)} predictions from {path}")
    return records


def write_predictions(
    path: str | Path, records: typing.Iterable[PredictionRecord]
) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            line = {
                "id": record.id,
                "pred": record.pred.as_list(),
                "gt": record.gt.as_list(),
            }
            f.write(json.dumps(line) + "\n")
