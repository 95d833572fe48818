import itertools
import typing


from curloc.errors import ConfigError
from curloc.runner.config import RunConfig
from curloc.scheduler import (
    DEFAULT_TAU_0,
    CriteriaSwitches,
    DecayKind,
    DeltaSource,
    RegimeMode,
)
from curloc.tracker import RefreshStrategy
from curloc.utils.helpers import deep_update

Overrides = dict[str, typing.Any]
Recipe = list[tuple[str, Overrides]]

WINDOW_SIZES = (10, 30, 100)
WINDOW_REFRESHES = (
    RefreshStrategy.FULL,
    RefreshStrategy.HALF,
    RefreshStrategy.QUARTER,
)
IDENTICAL_DELTAS = (0.05, 0.15, 0.25)
DECAY_DELTA_0 = (0.1, 0.15, 0.2, 0.25)
GROUP_SIZES = (4, 6, 8, 10)
# (d1, d2, b1, b2); the last increment is always 0.05
PIECEWISE_GRID = (
    (0.10, 0.05, 0.55, 0.70),
    (0.15, 0.10, 0.55, 0.75),
    (0.20, 0.15, 0.60, 0.75),
    (0.25, 0.20, 0.60, 0.75),
    (0.10, 0.05, 0.50, 0.70),
    (0.15, 0.10, 0.50, 0.75),
)


def _curriculum(**schedule: typing.Any) -> Overrides:
    """Binary-reward piecewise schedule with the given schedule fields."""
    return {
        "schedule": {
            "kind": DecayKind.PIECEWISE.value,
            "tau_0": DEFAULT_TAU_0[DecayKind.PIECEWISE],
            **schedule,
        },
        "reward": {"scheme": "binary"},
    }


def criteria_recipe() -> Recipe:
    variants = []
    for flags in itertools.product((True, False), repeat=3):
        if not any(flags):
            continue
        switches = CriteriaSwitches(
            hit_rate=flags[0], stability=flags[1], margin=flags[2]
        )
        variants.append(
            (switches.label, _curriculum(criteria=switches.model_dump()))
        )
    return variants


def strategy_recipe() -> Recipe:
    modes = (
        RegimeMode.ADAPTIVE,
        RegimeMode.AGGRESSIVE,
        RegimeMode.MODERATE,
        RegimeMode.CONSERVATIVE,
    )
    return [
        (
            mode.value,
            _curriculum(
                regime_mode=mode.value,
                delta_source=DeltaSource.REGIME.value,
            ),
        )
        for mode in modes
    ]


def delta_recipe() -> Recipe:
    variants = [
        (
            "dynamic",
            _curriculum(
                regime_mode=RegimeMode.ADAPTIVE.value,
                delta_source=DeltaSource.REGIME.value,
            ),
        )
    ]
    for delta in IDENTICAL_DELTAS:
        variants.append(
            (
                f"identical_{delta:.2f}",
                _curriculum(
                    delta_source=DeltaSource.TABLE.value,
                    piecewise_deltas=[delta, delta, delta],
                ),
            )
        )
    return variants


def window_recipe() -> Recipe:
    return [
        (
            f"n{size}_{refresh.value}",
            {"window": {"size": size, "refresh": refresh.value}},
        )
        for size, refresh in itertools.product(WINDOW_SIZES, WINDOW_REFRESHES)
    ]


def decay_recipe() -> Recipe:
    variants = [("piecewise", _curriculum())]
    for kind, delta_0 in itertools.product(
        (DecayKind.LINEAR, DecayKind.COSINE), DECAY_DELTA_0
    ):
        variants.append(
            (
                f"{kind.value}_d{delta_0:.2f}",
                {
                    "schedule": {
                        "kind": kind.value,
                        "tau_0": DEFAULT_TAU_0[kind],
                        "delta_0": delta_0,
                    },
                    "reward": {"scheme": "binary"},
                },
            )
        )
    return variants


def group_size_recipe() -> Recipe:
    return [
        (f"g{size}", {"grpo": {"group_size": size}}) for size in GROUP_SIZES
    ]


def piecewise_recipe() -> Recipe:
    return [
        (
            f"d{d1:.2f}_{d2:.2f}_b{b1:.2f}_{b2:.2f}",
            _curriculum(
                delta_source=DeltaSource.TABLE.value,
                piecewise_deltas=[d1, d2, 0.05],
                piecewise_bounds=[b1, b2],
            ),
        )
        for d1, d2, b1, b2 in PIECEWISE_GRID
    ]


def baselines_recipe() -> Recipe:
    def fixed(tau: float) -> Overrides:
        return {
            "schedule": {"kind": DecayKind.FIXED.value, "tau_0": tau},
            "reward": {"scheme": "binary", "threshold": tau},
        }

    return [
        ("piecewise", _curriculum()),
        ("fixed_0.5", fixed(0.5)),
        ("fixed_0.8", fixed(0.8)),
        (
            "staged",
            {
                "schedule": {
                    "kind": DecayKind.STAGED.value,
                    "tau_0": DEFAULT_TAU_0[DecayKind.STAGED],
                },
                "reward": {"scheme": "staged"},
            },
        ),
        (
            "raw_iou",
            {
                "schedule": {
                    "kind": DecayKind.FIXED.value,
                    "tau_0": DEFAULT_TAU_0[DecayKind.FIXED],
                },
                "reward": {"scheme": "raw_iou"},
            },
        ),
    ]


RECIPES: dict[str, typing.Callable[[], Recipe]] = {
    "criteria": criteria_recipe,
    "strategy": strategy_recipe,
    "delta": delta_recipe,
    "window": window_recipe,
    "decay": decay_recipe,
    "group_size": group_size_recipe,
    "piecewise": piecewise_recipe,
    "baselines": baselines_recipe,
}


def expand_recipe(name: str, base: RunConfig) -> list[tuple[str, RunConfig]]:
    """Validated run config of every variant of a recipe."""
    if name not in RECIPES:
        raise ConfigError(
            f"Unknown recipe '{name}', expected one of "
            f"{', '.join(sorted(RECIPES))}"
        )

    base_data = base.model_dump(mode="json")
    variants = []
    for variant, overrides in RECIPES[name]():
        data = deep_update(base_data, overrides)
        data["name"] = f"{base.name}/{variant}"
        variants.append((variant, RunConfig.model_validate(data)))
    return variants
