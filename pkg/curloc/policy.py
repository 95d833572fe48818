import math
import typing


import numpy as np
from pydantic import BaseModel, ConfigDict, Field


LOG_2PI = math.log(2 * math.pi)
N_COORDS = 4


class PolicyParams(BaseModel):
    """
    Diagonal Gaussian box policy in (cx, cy, log w, log h) space.

    The policy adds ``mean`` to the encoded ground truth and samples with
    scale ``max(exp(log_scale), sigma_min)``. The ``ref_*`` fields hold the
    frozen reference copy for the KL term, the ``moment*`` fields the adam
    state.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray = Field(description="Mean offset, 4-vector.")
    log_scale: np.ndarray = Field(description="Log-scales, 4-vector.")
    ref_mean: np.ndarray = Field(description="Frozen reference mean.")
    ref_log_scale: np.ndarray = Field(
        description="Frozen reference log-scales."
    )
    sigma_min: float = Field(default=0.0, ge=0.0)
    # adam state over (mean, log_scale) stacked into one 8-vector
    moment1: np.ndarray = Field(
        default_factory=lambda: np.zeros(2 * N_COORDS)
    )
    moment2: np.ndarray = Field(
        default_factory=lambda: np.zeros(2 * N_COORDS)
    )
    step_count: int = 0

    @classmethod
    def initial(
        cls,
        mean: typing.Sequence[float] | np.ndarray,
        log_scale: typing.Sequence[float] | np.ndarray,
        sigma_min: float,
    ) -> "PolicyParams":
        mean = np.array(mean, dtype=float)
        log_scale = np.array(log_scale, dtype=float)
        return cls(
            mean=mean,
            log_scale=log_scale,
            ref_mean=mean.copy(),
            ref_log_scale=log_scale.copy(),
            sigma_min=sigma_min,
        )

    def updated(
        self,
        mean: np.ndarray,
        log_scale: np.ndarray,
        moment1: typing.Optional[np.ndarray] = None,
        moment2: typing.Optional[np.ndarray] = None,
    ) -> "PolicyParams":
        return self.model_copy(
            update={
                "mean": mean,
                "log_scale": log_scale,
                "moment1": self.moment1 if moment1 is None else moment1,
                "moment2": self.moment2 if moment2 is None else moment2,
                "step_count": self.step_count + 1,
            }
        )

    def to_dict(self) -> dict[str, typing.Any]:
        return {
            "mean": self.mean.tolist(),
            "log_scale": self.log_scale.tolist(),
            "ref_mean": self.ref_mean.tolist(),
            "ref_log_scale": self.ref_log_scale.tolist(),
            "sigma_min": self.sigma_min,
            "step_count": self.step_count,
        }


def effective_scale(params: PolicyParams) -> np.ndarray:
    return np.maximum(np.exp(params.log_scale), params.sigma_min)


def reference_scale(params: PolicyParams) -> np.ndarray:
    return np.maximum(np.exp(params.ref_log_scale), params.sigma_min)


def scale_is_free(params: PolicyParams) -> np.ndarray:
    """Coordinates whose scale sits above the sigma_min floor."""
    return np.exp(params.log_scale) > params.sigma_min


def gaussian_log_prob(
    params: PolicyParams, raw: np.ndarray, encoded: np.ndarray
) -> np.ndarray:
    """Log-density of pre-clamp samples, one value per row of raw."""
    sigma = effective_scale(params)
    z = (np.asarray(raw) - encoded - params.mean) / sigma
    return np.sum(-0.5 * z**2 - np.log(sigma) - 0.5 * LOG_2PI, axis=-1)


def gaussian_kl(params: PolicyParams) -> float:
    """
    KL(policy || reference) in closed form, averaged over the 4 coordinates.
    """
    sigma = effective_scale(params)
    sigma_ref = reference_scale(params)
    per_coord = (
        np.log(sigma_ref / sigma)
        + (sigma**2 + (params.mean - params.ref_mean) ** 2)
        / (2 * sigma_ref**2)
        - 0.5
    )
    return float(np.mean(per_coord))


def kl_gradient(params: PolicyParams) -> tuple[np.ndarray, np.ndarray]:
    sigma = effective_scale(params)
    sigma_ref = reference_scale(params)
    grad_mean = (params.mean - params.ref_mean) / sigma_ref**2 / N_COORDS
    grad_log_scale = np.where(
        scale_is_free(params),
        (sigma**2 / sigma_ref**2 - 1.0) / N_COORDS,
        0.0,
    )
    return grad_mean, grad_log_scale


def score(
    params: PolicyParams, raw: np.ndarray, encoded: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample gradient of the log-density w.r.t. mean and log-scale."""
    sigma = effective_scale(params)
    eps = (np.asarray(raw) - encoded - params.mean) / sigma
    grad_mean = eps / sigma
    grad_log_scale = np.where(scale_is_free(params), eps**2 - 1.0, 0.0)
    return grad_mean, grad_log_scale
