import logging
import math
import typing


import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


from curloc.errors import GradientError, InputError
from curloc.geometry import Box
from curloc.policy import (
    PolicyParams,
    gaussian_kl,
    gaussian_log_prob,
    kl_gradient,
    score,
)

logger = logging.getLogger(__name__)

# log-ratios beyond this are clamped before exponentiation
MAX_LOG_RATIO = 20.0


class GrpoConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    group_size: int = Field(
        default=8, ge=2, description="Candidates sampled per step (G)."
    )
    clip_eps: float = Field(
        default=0.2, gt=0.0, lt=1.0, description="Ratio clip width."
    )
    beta: float = Field(default=0.4, ge=0.0, description="KL coefficient.")
    gamma: float = Field(
        default=1e-6,
        gt=0.0,
        description="Stability term inside the advantage square root.",
    )
    learning_rate: float = Field(default=0.05, gt=0.0)
    optimizer: typing.Literal["adam", "sgd"] = "adam"
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)


class GroupSample(BaseModel):
    """One training step's group of candidates."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    step: int = Field(ge=0)
    target: Box
    target_encoding: np.ndarray = Field(
        description="(cx, cy, log w, log h) of the ground truth."
    )
    raw: np.ndarray = Field(description="Pre-clamp samples, shape (G, 4).")
    corners: np.ndarray = Field(description="Decoded boxes, shape (G, 4).")
    ious: np.ndarray
    rewards: np.ndarray
    log_probs: np.ndarray = Field(
        description="Log-probabilities under the current policy."
    )
    old_log_probs: np.ndarray = Field(
        description="Log-probabilities under the sampling policy."
    )

    @model_validator(mode="after")
    def check_lengths(self) -> "GroupSample":
        size = len(self.rewards)
        if size < 2:
            raise InputError(f"Group needs at least 2 candidates, got {size}")
        lengths = {
            "raw": len(self.raw),
            "corners": len(self.corners),
            "ious": len(self.ious),
            "log_probs": len(self.log_probs),
            "old_log_probs": len(self.old_log_probs),
        }
        for name, length in lengths.items():
            if length != size:
                raise InputError(
                    f"{name} has {length} entries, expected {size}"
                )
        if not np.all(np.isfinite(self.rewards)):
            raise InputError(f"Rewards must be finite: {self.rewards}")
        return self

    @property
    def size(self) -> int:
        return len(self.rewards)

    @property
    def boxes(self) -> list[Box]:
        return [Box.from_sequence(row) for row in self.corners.tolist()]

    def with_log_probs(self, log_probs: np.ndarray) -> "GroupSample":
        return self.model_copy(update={"log_probs": log_probs})


def group_advantages(rewards: np.ndarray, gamma: float) -> np.ndarray:
    """
    Group-normalised advantages (r - mean) / sqrt(var + gamma).

    Uses the population variance. A group whose rewards are all equal gets
    an exact zero vector.
    """
    rewards = np.asarray(rewards, dtype=float)
    if not np.all(np.isfinite(rewards)):
        raise InputError(f"Rewards must be finite: {rewards}")
    if gamma <= 0:
        raise InputError(f"gamma must be positive, got {gamma}")

    if np.all(rewards == rewards[0]):
        return np.zeros_like(rewards)

    centred = rewards - rewards.mean()
    return centred / math.sqrt(float(np.mean(centred**2)) + gamma)


def compute_ratios(group: GroupSample) -> tuple[np.ndarray, bool]:
    log_ratio = group.log_probs - group.old_log_probs
    clamped = bool(np.any(np.abs(log_ratio) > MAX_LOG_RATIO))
    if clamped:
        logger.warning(
            f"Ratio overflow at step {group.step}: log-ratio clamped to "
            f"±{MAX_LOG_RATIO}"
        )
    return np.exp(np.clip(log_ratio, -MAX_LOG_RATIO, MAX_LOG_RATIO)), clamped


def grpo_objective(
    group: GroupSample,
    advantages: np.ndarray,
    kl: float,
    cfg: GrpoConfig,
) -> float:
    ratios, _ = compute_ratios(group)
    clipped = np.clip(ratios, 1 - cfg.clip_eps, 1 + cfg.clip_eps)
    surrogate = np.minimum(ratios * advantages, clipped * advantages)
    return float(np.mean(surrogate)) - cfg.beta * kl


def evaluate_objective(
    params: PolicyParams,
    group: GroupSample,
    advantages: np.ndarray,
    cfg: GrpoConfig,
) -> float:
    """grpo_objective with log-probabilities and KL taken at params."""
    log_probs = gaussian_log_prob(params, group.raw, group.target_encoding)
    return grpo_objective(
        group.with_log_probs(log_probs), advantages, gaussian_kl(params), cfg
    )


def policy_gradient(
    params: PolicyParams,
    group: GroupSample,
    advantages: np.ndarray,
    cfg: GrpoConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Analytic gradient of evaluate_objective w.r.t. (mean, log_scale).

    Candidates whose ratio sits on the clipped side of the surrogate
    contribute nothing.
    """
    advantages = np.asarray(advantages, dtype=float)
    log_probs = gaussian_log_prob(params, group.raw, group.target_encoding)
    ratios, _ = compute_ratios(group.with_log_probs(log_probs))

    clipped_high = (advantages > 0) & (ratios > 1 + cfg.clip_eps)
    clipped_low = (advantages < 0) & (ratios < 1 - cfg.clip_eps)
    weights = np.where(clipped_high | clipped_low, 0.0, ratios * advantages)

    score_mean, score_log_scale = score(
        params, group.raw, group.target_encoding
    )
    grad_mean = weights @ score_mean / group.size
    grad_log_scale = weights @ score_log_scale / group.size

    if cfg.beta > 0:
        kl_mean, kl_log_scale = kl_gradient(params)
        grad_mean = grad_mean - cfg.beta * kl_mean
        grad_log_scale = grad_log_scale - cfg.beta * kl_log_scale

    return grad_mean, grad_log_scale


def _check_finite(name: str, grad: np.ndarray) -> None:
    for index, value in enumerate(grad):
        if not math.isfinite(value):
            raise GradientError(f"{name}[{index}]", float(value))


def policy_gradient_step(
    params: PolicyParams,
    group: GroupSample,
    advantages: np.ndarray,
    cfg: GrpoConfig,
) -> PolicyParams:
    """One gradient-ascent step on the objective; the reference is kept."""
    grad_mean, grad_log_scale = policy_gradient(
        params, group, advantages, cfg
    )
    _check_finite("mean", grad_mean)
    _check_finite("log_scale", grad_log_scale)

    if cfg.optimizer == "sgd":
        return params.updated(
            mean=params.mean + cfg.learning_rate * grad_mean,
            log_scale=params.log_scale + cfg.learning_rate * grad_log_scale,
        )

    grad = np.concatenate([grad_mean, grad_log_scale])
    t = params.step_count + 1
    moment1 = cfg.adam_beta1 * params.moment1 + (1 - cfg.adam_beta1) * grad
    moment2 = cfg.adam_beta2 * params.moment2 + (1 - cfg.adam_beta2) * grad**2
    m_hat = moment1 / (1 - cfg.adam_beta1**t)
    v_hat = moment2 / (1 - cfg.adam_beta2**t)
    delta = cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)

    n = len(params.mean)
    return params.updated(
        mean=params.mean + delta[:n],
        log_scale=params.log_scale + delta[n:],
        moment1=moment1,
        moment2=moment2,
    )
