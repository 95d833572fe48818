import typing


import numpy as np


from curloc.geometry import decode_boxes, encode_box, iou_against
from curloc.grpo import GroupSample
from curloc.policy import PolicyParams, effective_scale, gaussian_log_prob
from curloc.reward import RewardScheme, compute_rewards
from curloc.simulation.task import TaskSpec, sample_ground_truth


def sample_group(
    params: PolicyParams,
    task: TaskSpec,
    group_size: int,
    rng: np.random.Generator,
    step: int = 0,
    scheme: RewardScheme = RewardScheme.RAW_IOU,
    tau: typing.Optional[float] = None,
) -> GroupSample:
    """
    Draw a ground truth and group_size candidates around it.

    Draw order is fixed (ground truth, then a (G, 4) block of standard
    normals) so a seeded generator reproduces the group exactly.
    """
    target = sample_ground_truth(task, rng)
    encoded = encode_box(target)

    eps = rng.standard_normal((group_size, 4))
    raw = encoded + params.mean + effective_scale(params) * eps
    corners = decode_boxes(raw)
    ious = iou_against(corners, target.as_array())
    log_probs = gaussian_log_prob(params, raw, encoded)

    return GroupSample(
        step=step,
        target=target,
        target_encoding=encoded,
        raw=raw,
        corners=corners,
        ious=ious,
        rewards=compute_rewards(ious, scheme, tau),
        log_probs=log_probs,
        old_log_probs=log_probs.copy(),
    )
