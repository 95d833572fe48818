import json
import typing
from pathlib import Path


import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator


from curloc.errors import ConfigError
from curloc.grpo import GrpoConfig
from curloc.reward import RewardScheme, RewardSpec
from curloc.scheduler import DecayKind, ScheduleConfig
from curloc.simulation.task import TaskSpec
from curloc.tracker import DEFAULT_WINDOW_SIZE, RefreshStrategy
from curloc.utils.helpers import deep_update


class WindowConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    size: int = Field(
        default=DEFAULT_WINDOW_SIZE, ge=1, description="Window length N."
    )
    refresh: RefreshStrategy = Field(
        default=RefreshStrategy.HALF,
        description="Records discarded after each threshold update.",
    )


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int = Field(
        default=200, ge=1, description="Held-out ground truths per seed."
    )
    seed: int = Field(
        default=10_000, ge=0, description="Seed of the held-out set."
    )


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "run"
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    reward: RewardSpec = Field(default_factory=RewardSpec)
    grpo: GrpoConfig = Field(default_factory=GrpoConfig)
    task: TaskSpec = Field(default_factory=TaskSpec)
    window: WindowConfig = Field(default_factory=WindowConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    steps: int = Field(default=200, ge=0)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])
    out_dir: str = "runs"
    temperature: float = Field(
        default=0.9,
        gt=0.0,
        description="Sampling temperature; recorded for provenance only.",
    )

    @model_validator(mode="before")
    @classmethod
    def fixed_threshold(cls, data: typing.Any) -> typing.Any:
        # a fixed schedule without its own tau_0 runs at reward.threshold
        if not isinstance(data, dict):
            return data
        schedule = data.get("schedule")
        if not isinstance(schedule, dict):
            return data
        kind = schedule.get("kind")
        if kind in (DecayKind.FIXED, DecayKind.FIXED.value) and (
            schedule.get("tau_0") is None
        ):
            reward = data.get("reward") or {}
            threshold = (
                reward.get("threshold")
                if isinstance(reward, dict)
                else reward.threshold
            )
            if threshold is not None:
                data = {
                    **data,
                    "schedule": {**schedule, "tau_0": threshold},
                }
        return data

    @model_validator(mode="after")
    def check_staged(self) -> "RunConfig":
        staged_schedule = self.schedule.kind == DecayKind.STAGED
        staged_reward = self.reward.scheme == RewardScheme.STAGED
        if staged_schedule != staged_reward:
            raise ValueError(
                "staged schedule and staged reward scheme go together, got "
                f"schedule {self.schedule.kind.value} with reward "
                f"{self.reward.scheme.value}"
            )
        if self.schedule.kind != DecayKind.FIXED and (
            self.reward.scheme == RewardScheme.RAW_IOU
        ):
            raise ValueError(
                "raw_iou reward has no threshold to schedule; use "
                "schedule kind fixed"
            )
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"seeds must be unique, got {self.seeds}")
        return self


def read_document(path: str | Path) -> dict[str, typing.Any]:
    """Read a YAML or JSON mapping from path."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML ({e})") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(
            f"{path}: expected a mapping at top level, got "
            f"{type(data).__name__}"
        )
    return data


def build_overrides(
    seeds: typing.Optional[list[int]] = None,
    schedule: typing.Optional[str] = None,
    steps: typing.Optional[int] = None,
    window: typing.Optional[int] = None,
    refresh: typing.Optional[str] = None,
    out: typing.Optional[str] = None,
) -> dict[str, typing.Any]:
    """Nested override mapping for the flags that were given."""
    overrides: dict[str, typing.Any] = {}
    if seeds is not None:
        overrides["seeds"] = seeds
    if schedule is not None:
        overrides["schedule"] = {"kind": schedule}
        if schedule == DecayKind.STAGED.value:
            overrides["reward"] = {"scheme": RewardScheme.STAGED.value}
    if steps is not None:
        overrides["steps"] = steps
    if window is not None:
        overrides.setdefault("window", {})["size"] = window
    if refresh is not None:
        overrides.setdefault("window", {})["refresh"] = refresh
    if out is not None:
        overrides["out_dir"] = out
    return overrides


def load_config(
    path: typing.Optional[str | Path] = None,
    overrides: typing.Optional[typing.Mapping[str, typing.Any]] = None,
) -> RunConfig:
    """
    Validate a config file with overrides merged in.

    A manifest written by a previous run is accepted too; its resolved
    config sits under the "config" key.
    """
    data: dict[str, typing.Any] = {}
    if path is not None:
        data = read_document(path)
        if "config" in data and "code_version" in data:
            data = data["config"]
    data = deep_update(data, overrides or {})
    return RunConfig.model_validate(data)


def config_schema() -> str:
    return json.dumps(RunConfig.model_json_schema(), indent=2)
