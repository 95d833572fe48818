import enum
import logging
import math
import typing


from pydantic import BaseModel, ConfigDict, Field, model_validator


from curloc.errors import ConfigError
from curloc.reward import StageTable, staged_threshold
from curloc.tracker import WindowStats

logger = logging.getLogger(__name__)

# the third adaptive regime starts at 0.75, where the piecewise boundary sits
REGIME_BOUNDARY_READING = "third adaptive regime starts at tau=0.75"
TAU_DECIMALS = 12


class DecayKind(str, enum.Enum):
    PIECEWISE = "piecewise"
    LINEAR = "linear"
    COSINE = "cosine"
    FIXED = "fixed"
    STAGED = "staged"


class RegimeMode(str, enum.Enum):
    ADAPTIVE = "adaptive"
    AGGRESSIVE = "aggressive"
    MODERATE = "moderate"
    CONSERVATIVE = "conservative"
    CUSTOM = "custom"


class DeltaSource(str, enum.Enum):
    REGIME = "regime"
    TABLE = "table"


class RegimeParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    delta: float = Field(gt=0.0, description="Threshold increment.")
    min_reward: float = Field(
        gt=0.0, le=1.0, description="Minimum window hit rate (P)."
    )
    max_std: float = Field(
        ge=0.0, description="Maximum window reward std (S)."
    )


# (exclusive upper tau bound, regime)
ADAPTIVE_REGIMES: list[tuple[float, RegimeParams]] = [
    (0.60, RegimeParams(delta=0.15, min_reward=0.80, max_std=0.20)),
    (0.75, RegimeParams(delta=0.10, min_reward=0.75, max_std=0.35)),
    (math.inf, RegimeParams(delta=0.05, min_reward=0.55, max_std=0.40)),
]

FIXED_REGIMES: dict[RegimeMode, RegimeParams] = {
    RegimeMode.AGGRESSIVE: RegimeParams(
        delta=0.15, min_reward=0.60, max_std=0.40
    ),
    RegimeMode.MODERATE: RegimeParams(
        delta=0.10, min_reward=0.70, max_std=0.25
    ),
    RegimeMode.CONSERVATIVE: RegimeParams(
        delta=0.05, min_reward=0.80, max_std=0.15
    ),
}

DEFAULT_TAU_0 = {
    DecayKind.PIECEWISE: 0.3,
    DecayKind.LINEAR: 0.2,
    DecayKind.COSINE: 0.2,
    DecayKind.FIXED: 0.5,
    DecayKind.STAGED: 0.3,
}


class CriteriaSwitches(BaseModel):
    """Which clauses of the update criterion are checked."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    hit_rate: bool = True
    stability: bool = True
    margin: bool = True

    @model_validator(mode="after")
    def check_any(self) -> "CriteriaSwitches":
        if not (self.hit_rate or self.stability or self.margin):
            raise ValueError("At least one criterion clause must be enabled")
        return self

    @property
    def label(self) -> str:
        return "r{}_s{}_m{}".format(
            int(self.hit_rate), int(self.stability), int(self.margin)
        )


class ScheduleConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: DecayKind = DecayKind.PIECEWISE
    tau_0: float = Field(
        default=0.3, ge=0.0, le=1.0, description="Initial threshold."
    )
    tau_target: float = Field(default=0.8, ge=0.0, le=1.0)
    piecewise_deltas: tuple[float, float, float] = (0.15, 0.10, 0.05)
    piecewise_bounds: tuple[float, float] = (0.55, 0.75)
    delta_source: DeltaSource = Field(
        default=DeltaSource.REGIME,
        description="Where piecewise increments come from: the active "
        "regime, or the stage table of piecewise_deltas/bounds.",
    )
    delta_0: float = Field(
        default=0.2, gt=0.0, description="Base step of linear/cosine decay."
    )
    margin_bound: float = Field(
        default=0.10, description="Minimum IoU margin (Delta)."
    )
    regime_mode: RegimeMode = RegimeMode.ADAPTIVE
    custom_regime: typing.Optional[RegimeParams] = None
    criteria: CriteriaSwitches = Field(default_factory=CriteriaSwitches)

    @model_validator(mode="before")
    @classmethod
    def default_tau_0(cls, data: typing.Any) -> typing.Any:
        if isinstance(data, dict) and data.get("tau_0") is None:
            kind = DecayKind(data.get("kind", DecayKind.PIECEWISE))
            data = {**data, "tau_0": DEFAULT_TAU_0[kind]}
        if (
            isinstance(data, dict)
            and DecayKind(data.get("kind", DecayKind.PIECEWISE))
            == DecayKind.FIXED
            and data.get("tau_target") is None
            and isinstance(data.get("tau_0"), (int, float))
        ):
            # a fixed threshold is its own target
            default = cls.model_fields["tau_target"].default
            data = {**data, "tau_target": max(data["tau_0"], default)}
        return data

    @model_validator(mode="after")
    def check_consistency(self) -> "ScheduleConfig":
        if self.tau_0 > self.tau_target:
            raise ValueError(
                f"tau_0 exceeds tau_target ({self.tau_0} > {self.tau_target})"
            )
        d1, d2, d3 = self.piecewise_deltas
        if not d1 >= d2 >= d3 > 0:
            raise ValueError(
                f"piecewise_deltas must satisfy d1 >= d2 >= d3 > 0, got "
                f"{self.piecewise_deltas}"
            )
        b1, b2 = self.piecewise_bounds
        if not b1 < b2:
            raise ValueError(
                "piecewise_bounds must be increasing, got "
                f"{self.piecewise_bounds}"
            )
        if (
            self.regime_mode == RegimeMode.CUSTOM
            and self.custom_regime is None
        ):
            raise ValueError("regime_mode 'custom' needs custom_regime")
        return self


class UpdateEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    old_tau: float
    new_tau: float
    mean_reward: float
    reward_std: float
    iou_margin: float
    regime: RegimeParams


def criterion(
    mean_reward: float,
    reward_std: float,
    iou_margin: float,
    regime: RegimeParams,
    margin_bound: float,
    switches: typing.Optional[CriteriaSwitches] = None,
) -> bool:
    """Composite update test; disabled clauses count as satisfied."""
    switches = switches or CriteriaSwitches()
    if switches.hit_rate and mean_reward < regime.min_reward:
        return False
    if switches.stability and reward_std > regime.max_std:
        return False
    if switches.margin and iou_margin < margin_bound:
        return False
    return True


def regime_for(
    tau: float,
    mode: RegimeMode,
    custom: typing.Optional[RegimeParams] = None,
) -> RegimeParams:
    if mode == RegimeMode.ADAPTIVE:
        for upper, regime in ADAPTIVE_REGIMES:
            if tau < upper:
                return regime
    if mode == RegimeMode.CUSTOM:
        if custom is None:
            raise ConfigError("Custom regime mode without regime values")
        return custom
    return FIXED_REGIMES[mode]


def next_regime_boundary(tau: float) -> float:
    for upper, _ in ADAPTIVE_REGIMES:
        if tau < upper:
            return upper
    return math.inf


class SchedulerState:
    """
    Curriculum threshold and its update history for one run.

    ``stages`` is only read by the staged kind.
    """

    def __init__(
        self,
        config: ScheduleConfig,
        stages: typing.Optional[StageTable] = None,
    ):
        if config.kind == DecayKind.STAGED and not stages:
            raise ConfigError("Staged schedule needs a stage table")
        self.config = config
        self.stages = stages
        self.tau = (
            staged_threshold(0.0, stages)
            if config.kind == DecayKind.STAGED and stages
            else config.tau_0
        )
        self.history: list[UpdateEvent] = []

    @property
    def kind(self) -> DecayKind:
        return self.config.kind

    @property
    def is_complete(self) -> bool:
        return self.tau >= self.config.tau_target

    @property
    def regime(self) -> RegimeParams:
        return regime_for(
            self.tau, self.config.regime_mode, self.config.custom_regime
        )

    def current_threshold(self, step: int, total_steps: int) -> float:
        """Threshold in force at step; the staged kind follows progress."""
        if self.kind == DecayKind.STAGED and total_steps > 0:
            self.tau = staged_threshold(
                step / total_steps, typing.cast(StageTable, self.stages)
            )
        return self.tau

    def maybe_update(self, stats: WindowStats, step: int) -> bool:
        """
        Raise the threshold when the window satisfies the criterion.

        The caller refreshes the window after an update.
        """
        if self.kind in (DecayKind.FIXED, DecayKind.STAGED):
            return False
        if self.is_complete:
            return False

        metrics = stats.metrics(self.tau)
        if metrics is None:
            return False

        regime = self.regime
        if not criterion(
            metrics.mean_reward,
            metrics.reward_std,
            metrics.iou_margin,
            regime,
            self.config.margin_bound,
            self.config.criteria,
        ):
            return False

        new_tau = min(
            self.tau + step_size(self.tau, self), self.config.tau_target
        )
        if (
            self.kind == DecayKind.PIECEWISE
            and self.config.delta_source == DeltaSource.REGIME
            and self.config.regime_mode == RegimeMode.ADAPTIVE
        ):
            new_tau = min(new_tau, next_regime_boundary(self.tau))
        new_tau = round(new_tau, TAU_DECIMALS)

        event = UpdateEvent(
            step=step,
            old_tau=self.tau,
            new_tau=new_tau,
            mean_reward=metrics.mean_reward,
            reward_std=metrics.reward_std,
            iou_margin=metrics.iou_margin,
            regime=regime,
        )
        self.history.append(event)
        logger.info(
            f"step {step}: tau {self.tau:.2f} -> {new_tau:.2f} "
            f"(hit rate {metrics.mean_reward:.3f}, std "
            f"{metrics.reward_std:.3f}, margin {metrics.iou_margin:.3f})"
        )
        self.tau = new_tau
        return True


def step_size(tau: float, state: SchedulerState) -> float:
    """
    Increment applied at tau; 0.0 once the target is reached or for kinds
    that never update.
    """
    config = state.config
    if tau >= config.tau_target:
        return 0.0

    if config.kind == DecayKind.PIECEWISE:
        if config.delta_source == DeltaSource.REGIME:
            return regime_for(
                tau, config.regime_mode, config.custom_regime
            ).delta
        d1, d2, d3 = config.piecewise_deltas
        b1, b2 = config.piecewise_bounds
        if tau < b1:
            return d1
        if tau < b2:
            return d2
        return d3

    if config.kind in (DecayKind.LINEAR, DecayKind.COSINE):
        span = config.tau_target - config.tau_0
        progress = (tau - config.tau_0) / span
        if config.kind == DecayKind.LINEAR:
            return config.delta_0 * (1 - progress)
        return config.delta_0 / 2 * (1 + math.cos(math.pi * progress))

    return 0.0
