import pytest


from curloc.runner.config import RunConfig
from curloc.simulation.task import TaskSpec


@pytest.fixture
def task() -> TaskSpec:
    return TaskSpec()


@pytest.fixture
def small_config(tmp_path) -> RunConfig:
    """Short two-seed curriculum run writing under tmp_path."""
    return RunConfig.model_validate(
        {
            "name": "small",
            "steps": 40,
            "seeds": [0, 1],
            "window": {"size": 10},
            "eval": {"samples": 20},
            "out_dir": str(tmp_path / "runs"),
        }
    )
