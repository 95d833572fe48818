import copy
import typing
from datetime import datetime, timezone


def get_current_time() -> datetime:
    # Get current date and time
    return datetime.now(timezone.utc).replace(microsecond=0)


def deep_update(
    base: dict[str, typing.Any], updates: typing.Mapping[str, typing.Any]
) -> dict[str, typing.Any]:
    """Return a copy of base with nested mappings in updates merged in."""
    merged = copy.deepcopy(base)
    for key, value in updates.items():
        if isinstance(value, typing.Mapping) and isinstance(
            merged.get(key), dict
        ):
            merged[key] = deep_update(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged
