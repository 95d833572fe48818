import math
import typing


import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


from curloc.errors import InputError

# smallest area a decoded box may have; sides never shrink below its root
MIN_BOX_AREA = 1e-4
MIN_SIDE = math.sqrt(MIN_BOX_AREA)


class Box(BaseModel):
    """Axis-aligned box in normalized [0, 1] corner coordinates."""

    model_config = ConfigDict(frozen=True)

    x1: float = Field(description="Left edge.")
    y1: float = Field(description="Top edge.")
    x2: float = Field(description="Right edge.")
    y2: float = Field(description="Bottom edge.")

    @model_validator(mode="after")
    def check_corners(self) -> "Box":
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise InputError(f"Box coordinates must be finite, got {coords}")
        if not all(0.0 <= c <= 1.0 for c in coords):
            raise InputError(
                f"Box coordinates must lie in [0, 1], got {coords}"
            )
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InputError(f"Box has no area: {coords}")
        return self

    @classmethod
    def from_sequence(cls, values: typing.Sequence[float]) -> "Box":
        if len(values) != 4:
            raise InputError(
                f"Box needs 4 coordinates, got {len(values)}: {values}"
            )
        x1, y1, x2, y2 = (float(v) for v in values)
        return cls(x1=x1, y1=y1, x2=x2, y2=y2)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.x2, self.y2], dtype=float)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


def encode_box(box: Box) -> np.ndarray:
    """Center/log-size encoding (cx, cy, log w, log h) of a box."""
    return np.array(
        [
            (box.x1 + box.x2) / 2,
            (box.y1 + box.y2) / 2,
            math.log(box.width),
            math.log(box.height),
        ],
        dtype=float,
    )


def _floor_side(
    lo: np.ndarray, hi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    narrow = hi - lo < MIN_SIDE
    centre = (lo + hi) / 2
    grown_lo = centre - MIN_SIDE / 2
    grown_hi = centre + MIN_SIDE / 2
    # a grown side that pokes out of the image is pinned to the border
    grown_lo, grown_hi = (
        np.where(
            grown_lo < 0,
            0.0,
            np.where(grown_hi > 1, 1.0 - MIN_SIDE, grown_lo),
        ),
        np.where(
            grown_lo < 0,
            MIN_SIDE,
            np.where(grown_hi > 1, 1.0, grown_hi),
        ),
    )
    return np.where(narrow, grown_lo, lo), np.where(narrow, grown_hi, hi)


def decode_boxes(raw: np.ndarray) -> np.ndarray:
    """
    Map unconstrained (cx, cy, log w, log h) rows to valid corner rows.

    Parameters:
        raw (np.ndarray): array of shape (..., 4).

    Returns:
        np.ndarray: corners (x1, y1, x2, y2) of the same leading shape,
        clipped to the unit square with every side at least MIN_SIDE.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape[-1] != 4:
        raise InputError(f"Expected trailing dimension 4, got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise InputError(f"Raw box parameters must be finite: {raw}")

    with np.errstate(over="ignore"):
        half_w = np.exp(raw[..., 2]) / 2
        half_h = np.exp(raw[..., 3]) / 2

    x1 = np.clip(raw[..., 0] - half_w, 0.0, 1.0)
    x2 = np.clip(raw[..., 0] + half_w, 0.0, 1.0)
    y1 = np.clip(raw[..., 1] - half_h, 0.0, 1.0)
    y2 = np.clip(raw[..., 1] + half_h, 0.0, 1.0)
    x1, x2 = _floor_side(x1, x2)
    y1, y2 = _floor_side(y1, y2)

    return np.stack([x1, y1, x2, y2], axis=-1)


def clamp_to_unit(raw: typing.Sequence[float] | np.ndarray) -> Box:
    corners = decode_boxes(np.asarray(raw, dtype=float).reshape(4))
    return Box.from_sequence(corners.tolist())


def iou_against(corners: np.ndarray, target: np.ndarray) -> np.ndarray:
    """IoU of every corner row against a single target box."""
    corners = np.asarray(corners, dtype=float)
    target = np.asarray(target, dtype=float)

    inter_w = np.minimum(corners[..., 2], target[2]) - np.maximum(
        corners[..., 0], target[0]
    )
    inter_h = np.minimum(corners[..., 3], target[3]) - np.maximum(
        corners[..., 1], target[1]
    )
    inter = np.clip(inter_w, 0.0, None) * np.clip(inter_h, 0.0, None)

    area_a = (corners[..., 2] - corners[..., 0]) * (
        corners[..., 3] - corners[..., 1]
    )
    area_b = (target[2] - target[0]) * (target[3] - target[1])
    union = area_a + area_b - inter

    return np.clip(inter / union, 0.0, 1.0)


def iou(a: Box, b: Box) -> float:
    return float(iou_against(a.as_array(), b.as_array()))
