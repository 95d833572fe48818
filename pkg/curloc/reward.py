import enum
import math
import typing


import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


from curloc.errors import ConfigError, InputError


StageTable = list[tuple[float, float]]

# (start fraction of training, threshold); boundaries at 10% and 25%
DEFAULT_STAGES: StageTable = [(0.0, 0.3), (0.10, 0.5), (0.25, 0.7)]


class RewardScheme(str, enum.Enum):
    BINARY = "binary"
    RAW_IOU = "raw_iou"
    STAGED = "staged"


def _check_unit(name: str, value: float) -> None:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise InputError(f"{name} must lie in [0, 1], got {value!r}")


def check_stage_table(stages: StageTable) -> None:
    if len(stages) == 0:
        raise ConfigError("Stage table is empty")

    fractions = [fraction for fraction, _ in stages]
    if fractions != sorted(fractions):
        raise ConfigError(
            f"Stage table must be sorted by progress fraction: {fractions}"
        )
    if fractions[0] != 0.0:
        raise ConfigError(
            f"First stage must start at progress 0, got {fractions[0]}"
        )
    for fraction, tau in stages:
        if not 0.0 <= fraction <= 1.0:
            raise ConfigError(f"Stage fraction {fraction} outside [0, 1]")
        if not 0.0 <= tau <= 1.0:
            raise ConfigError(f"Stage threshold {tau} outside [0, 1]")


class RewardSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    scheme: RewardScheme = Field(
        default=RewardScheme.BINARY,
        description="Reward scheme applied to candidate IoUs.",
    )
    threshold: float = Field(
        default=0.5,
        ge=0.0,
        le=1.0,
        description="Binary threshold of the fixed schedule kind.",
    )
    stages: StageTable = Field(
        default_factory=lambda: list(DEFAULT_STAGES),
        description="(progress fraction, threshold) pairs of the staged "
        "scheme.",
    )

    @model_validator(mode="after")
    def check_stages(self) -> "RewardSpec":
        check_stage_table(self.stages)
        return self


def binary_reward(iou_value: float, tau: float) -> int:
    _check_unit("iou_value", iou_value)
    _check_unit("tau", tau)
    return 1 if iou_value >= tau else 0


def raw_iou_reward(iou_value: float) -> float:
    _check_unit("iou_value", iou_value)
    return float(iou_value)


def staged_threshold(progress: float, stages: StageTable) -> float:
    """
    Threshold of the last stage whose start fraction is at or below
    progress; a boundary belongs to the later stage.
    """
    check_stage_table(stages)
    _check_unit("progress", progress)

    tau = stages[0][1]
    for start, stage_tau in stages:
        if start <= progress:
            tau = stage_tau
        else:
            break
    return float(tau)


def compute_rewards(
    ious: np.ndarray, scheme: RewardScheme, tau: typing.Optional[float]
) -> np.ndarray:
    """Vectorised rewards for one group of candidate IoUs."""
    ious = np.asarray(ious, dtype=float)
    if np.any(~np.isfinite(ious)) or np.any((ious < 0) | (ious > 1)):
        raise InputError(f"IoU values must lie in [0, 1]: {ious}")

    if scheme == RewardScheme.RAW_IOU:
        return ious.copy()

    if tau is None:
        raise InputError(f"Scheme {scheme.value} needs a threshold")
    _check_unit("tau", tau)
    return (ious >= tau).astype(float)
