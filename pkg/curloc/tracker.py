import enum
import logging
import math
import typing
from collections import deque


import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


from curloc.errors import InputError

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_SIZE = 30


class RefreshStrategy(str, enum.Enum):
    NONE = "none"
    QUARTER = "quarter"
    HALF = "half"
    FULL = "full"


def retained_after_refresh(strategy: RefreshStrategy, size: int) -> int:
    """Number of newest records a full window of size keeps on refresh."""
    if strategy == RefreshStrategy.NONE:
        return size
    if strategy == RefreshStrategy.QUARTER:
        return math.ceil(3 * size / 4)
    if strategy == RefreshStrategy.HALF:
        return size // 2
    return 0


class StepRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    step: int = Field(ge=0)
    ious: np.ndarray
    rewards: np.ndarray
    mean_reward: float
    mean_iou: float

    @model_validator(mode="after")
    def check_values(self) -> "StepRecord":
        if len(self.ious) != len(self.rewards) or len(self.ious) == 0:
            raise InputError(
                f"Step {self.step}: {len(self.ious)} IoUs vs "
                f"{len(self.rewards)} rewards"
            )
        if not (
            np.all(np.isfinite(self.ious))
            and np.all(np.isfinite(self.rewards))
        ):
            raise InputError(f"Step {self.step}: non-finite values")
        if abs(self.mean_iou - float(np.mean(self.ious))) > 1e-12:
            raise InputError(f"Step {self.step}: mean_iou mismatch")
        if abs(self.mean_reward - float(np.mean(self.rewards))) > 1e-12:
            raise InputError(f"Step {self.step}: mean_reward mismatch")
        return self

    @classmethod
    def build(
        cls, step: int, ious: np.ndarray, rewards: np.ndarray
    ) -> "StepRecord":
        ious = np.asarray(ious, dtype=float)
        rewards = np.asarray(rewards, dtype=float)
        return cls(
            step=step,
            ious=ious,
            rewards=rewards,
            mean_reward=float(np.mean(rewards)),
            mean_iou=float(np.mean(ious)),
        )


class WindowMetrics(BaseModel):
    """Snapshot of the three scheduling signals at one threshold."""

    model_config = ConfigDict(frozen=True)

    tau: float
    mean_reward: float
    reward_std: float
    iou_margin: float


class _RunningColumn:
    """Deque of floats with a running sum."""

    def __init__(self) -> None:
        self.values: deque[float] = deque()
        self.total = 0.0

    def append(self, value: float) -> None:
        self.values.append(value)
        self.total += value

    def popleft(self) -> None:
        self.total -= self.values.popleft()
        if not self.values:
            self.total = 0.0

    def __len__(self) -> int:
        return len(self.values)


class WindowStats:
    """
    Sliding window over the most recent training steps.

    Stores per-candidate IoUs so the hit rate can be recomputed against
    whatever threshold is current. Hit fractions are cached for the last
    threshold queried and kept in step with pushes and evictions.
    """

    def __init__(
        self,
        size: int = DEFAULT_WINDOW_SIZE,
        refresh: RefreshStrategy = RefreshStrategy.HALF,
    ):
        if size < 1:
            raise InputError(f"Window size must be at least 1, got {size}")
        self.size = size
        self.refresh = RefreshStrategy(refresh)
        self._records: deque[StepRecord] = deque()
        self._iou = _RunningColumn()
        self._hits: typing.Optional[_RunningColumn] = None
        self._hits_tau: typing.Optional[float] = None

    def __len__(self) -> int:
        return len(self._records)

    @property
    def is_full(self) -> bool:
        return len(self._records) == self.size

    @property
    def records(self) -> tuple[StepRecord, ...]:
        return tuple(self._records)

    def push(self, record: StepRecord) -> None:
        if self._records and record.step <= self._records[-1].step:
            raise InputError(
                f"Step index must increase: got {record.step} after "
                f"{self._records[-1].step}"
            )

        self._records.append(record)
        self._iou.append(record.mean_iou)
        if self._hits is not None:
            self._hits.append(_hit_fraction(record, self._hits_tau))

        if len(self._records) > self.size:
            self._drop_oldest()

    def _drop_oldest(self) -> None:
        self._records.popleft()
        self._iou.popleft()
        if self._hits is not None:
            self._hits.popleft()

    def _hit_fractions(self, tau: float) -> _RunningColumn:
        if self._hits is None or self._hits_tau != tau:
            column = _RunningColumn()
            for record in self._records:
                column.append(_hit_fraction(record, tau))
            self._hits, self._hits_tau = column, tau
        return self._hits

    def mean_reward(self, tau: float) -> typing.Optional[float]:
        """Window hit rate at tau, or None while the window is filling."""
        if not self.is_full:
            return None
        hits = self._hit_fractions(tau)
        return min(max(hits.total / self.size, 0.0), 1.0)

    def reward_std(self, tau: float) -> typing.Optional[float]:
        if not self.is_full:
            return None
        hits = self._hit_fractions(tau)
        return float(np.std(np.fromiter(hits.values, dtype=float)))

    def iou_margin(self, tau: float) -> typing.Optional[float]:
        if not self.is_full:
            return None
        return self._iou.total / self.size - tau

    def metrics(self, tau: float) -> typing.Optional[WindowMetrics]:
        if not self.is_full:
            return None
        return WindowMetrics(
            tau=tau,
            mean_reward=typing.cast(float, self.mean_reward(tau)),
            reward_std=typing.cast(float, self.reward_std(tau)),
            iou_margin=typing.cast(float, self.iou_margin(tau)),
        )

    def refresh_on_update(self) -> None:
        keep = min(retained_after_refresh(self.refresh, self.size), len(self))
        while len(self._records) > keep:
            self._drop_oldest()
        logger.debug(
            f"Window refreshed ({self.refresh.value}): {keep} records kept"
        )


def _hit_fraction(record: StepRecord, tau: typing.Optional[float]) -> float:
    return float(np.mean(record.ious >= tau))
