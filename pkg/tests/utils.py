import math
import typing


import numpy as np


from curloc.geometry import Box, decode_boxes, encode_box, iou_against
from curloc.grpo import GroupSample, GrpoConfig, evaluate_objective
from curloc.policy import PolicyParams, gaussian_log_prob
from curloc.tracker import StepRecord

DEFAULT_TARGET = Box(x1=0.3, y1=0.3, x2=0.7, y2=0.7)


def make_params(
    mean: typing.Sequence[float] = (0.0, 0.0, 0.0, 0.0),
    scale: float = 0.2,
    sigma_min: float = 0.0,
) -> PolicyParams:
    return PolicyParams.initial(
        mean, np.full(4, math.log(scale)), sigma_min
    )


def make_group(
    params: PolicyParams,
    raw: np.ndarray,
    rewards: typing.Sequence[float],
    target: Box = DEFAULT_TARGET,
    old_params: typing.Optional[PolicyParams] = None,
) -> GroupSample:
    """Group over hand-chosen raw samples; old_params defaults to params."""
    raw = np.asarray(raw, dtype=float)
    encoded = encode_box(target)
    corners = decode_boxes(raw)
    log_probs = gaussian_log_prob(params, raw, encoded)
    old_log_probs = (
        log_probs.copy()
        if old_params is None
        else gaussian_log_prob(old_params, raw, encoded)
    )
    return GroupSample(
        step=0,
        target=target,
        target_encoding=encoded,
        raw=raw,
        corners=corners,
        ious=iou_against(corners, target.as_array()),
        rewards=np.asarray(rewards, dtype=float),
        log_probs=log_probs,
        old_log_probs=old_log_probs,
    )


def finite_difference_gradient(
    params: PolicyParams,
    group: GroupSample,
    advantages: np.ndarray,
    cfg: GrpoConfig,
    h: float = 1e-5,
) -> tuple[np.ndarray, np.ndarray]:
    """Central differences of evaluate_objective over mean and log_scale."""

    def shifted(field: str, index: int, delta: float) -> float:
        values = getattr(params, field).copy()
        values[index] += delta
        moved = params.model_copy(update={field: values})
        return evaluate_objective(moved, group, advantages, cfg)

    grads = []
    for field in ("mean", "log_scale"):
        grads.append(
            np.array(
                [
                    (shifted(field, i, h) - shifted(field, i, -h)) / (2 * h)
                    for i in range(4)
                ]
            )
        )
    return grads[0], grads[1]


def make_record(
    step: int, ious: typing.Sequence[float], tau: float = 0.5
) -> StepRecord:
    ious = np.asarray(ious, dtype=float)
    return StepRecord.build(step, ious, (ious >= tau).astype(float))


def window_oracle(
    records: typing.Sequence[StepRecord], tau: float
) -> tuple[float, float, float]:
    """Window metrics recomputed from scratch over the stored records."""
    hits = [float(np.mean(record.ious >= tau)) for record in records]
    ious = [float(np.mean(record.ious)) for record in records]
    return (
        float(np.mean(hits)),
        float(np.std(hits)),
        float(np.mean(ious)) - tau,
    )
