import logging
import typing


import numpy as np
from pydantic import BaseModel, ConfigDict, Field


from curloc.errors import RunError
from curloc.grpo import (
    GrpoConfig,
    compute_ratios,
    group_advantages,
    grpo_objective,
    policy_gradient_step,
)
from curloc.policy import PolicyParams, gaussian_kl
from curloc.reward import RewardSpec
from curloc.scheduler import DecayKind, SchedulerState, UpdateEvent
from curloc.simulation.sampling import sample_group
from curloc.simulation.task import TaskSpec, initial_policy
from curloc.tracker import StepRecord, WindowStats

logger = logging.getLogger(__name__)


class MetricsRecord(BaseModel):
    """One row of a run trace."""

    model_config = ConfigDict(frozen=True)

    step: int = Field(ge=0)
    tau: float
    group_mean_reward: float
    window_mean_reward: typing.Optional[float] = None
    window_reward_std: typing.Optional[float] = None
    iou_margin: typing.Optional[float] = None
    group_mean_iou: float
    updated: bool
    objective: float


class RunResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    trace: list[MetricsRecord]
    initial_params: PolicyParams
    final_params: PolicyParams
    updates: list[UpdateEvent]
    max_iou: float = 0.0
    clamped_ratio_steps: int = 0

    @property
    def all_zero_fraction(self) -> float:
        """Share of steps whose group earned no reward at all."""
        if not self.trace:
            return 0.0
        zeros = sum(1 for row in self.trace if row.group_mean_reward == 0)
        return zeros / len(self.trace)

    def mean_iou(
        self, first: int = 0, last: typing.Optional[int] = None
    ) -> typing.Optional[float]:
        rows = self.trace[first:last]
        if not rows:
            return None
        return float(np.mean([row.group_mean_iou for row in rows]))

    def final_mean_iou(self, window: int = 100) -> typing.Optional[float]:
        return self.mean_iou(first=max(len(self.trace) - window, 0))


def train_run(
    task: TaskSpec,
    cfg: GrpoConfig,
    reward: RewardSpec,
    scheduler: SchedulerState,
    tracker: WindowStats,
    steps: int,
    seed: int,
    params: typing.Optional[PolicyParams] = None,
) -> RunResult:
    """
    Run the sample -> reward -> advantage -> update -> track -> schedule
    loop for a number of steps.

    The scheduler and tracker are advanced in place. Any component error is
    re-raised as RunError carrying the failing step.
    """
    rng = np.random.default_rng(seed)
    initial = params if params is not None else initial_policy(task)
    params = initial
    trace: list[MetricsRecord] = []
    max_iou = 0.0
    clamped_steps = 0

    for step in range(steps):
        try:
            tau = scheduler.current_threshold(step, steps)
            group = sample_group(
                params,
                task,
                cfg.group_size,
                rng,
                step=step,
                scheme=reward.scheme,
                tau=tau,
            )
            advantages = group_advantages(group.rewards, cfg.gamma)
            if compute_ratios(group)[1]:
                clamped_steps += 1
            objective = grpo_objective(
                group, advantages, gaussian_kl(params), cfg
            )
            params = policy_gradient_step(params, group, advantages, cfg)

            tracker.push(StepRecord.build(step, group.ious, group.rewards))
            metrics = tracker.metrics(tau)
            updated = scheduler.maybe_update(tracker, step)
            if updated:
                tracker.refresh_on_update()
        except Exception as e:
            raise RunError.from_exception(step, e) from e

        max_iou = max(max_iou, float(group.ious.max()))
        trace.append(
            MetricsRecord(
                step=step,
                tau=tau,
                group_mean_reward=float(group.rewards.mean()),
                window_mean_reward=metrics.mean_reward if metrics else None,
                window_reward_std=metrics.reward_std if metrics else None,
                iou_margin=metrics.iou_margin if metrics else None,
                group_mean_iou=float(group.ious.mean()),
                updated=updated,
                objective=objective,
            )
        )

    if scheduler.kind not in (DecayKind.FIXED, DecayKind.STAGED):
        logger.info(
            f"seed {seed}: {len(scheduler.history)} threshold updates, "
            f"final tau {scheduler.tau:.2f}"
        )

    return RunResult(
        trace=trace,
        initial_params=initial,
        final_params=params,
        updates=list(scheduler.history),
        max_iou=max_iou,
        clamped_ratio_steps=clamped_steps,
    )
