import concurrent.futures
import json
import logging
import typing
from itertools import repeat
from pathlib import Path


import pandas as pd
from pydantic import BaseModel, ConfigDict
from rich.table import Table


from curloc import __version__
from curloc.evaluation.metrics import summarize
from curloc.evaluation.policy_eval import evaluate_policy
from curloc.runner.config import RunConfig
from curloc.runner.recipes import expand_recipe
from curloc.runner.traces import write_trace
from curloc.scheduler import (
    REGIME_BOUNDARY_READING,
    DecayKind,
    SchedulerState,
    UpdateEvent,
)
from curloc.simulation.training import train_run
from curloc.tracker import WindowStats
from curloc.utils.helpers import get_current_time
from curloc.utils.logging import (
    close_events_logger,
    console,
    setup_events_logger,
)

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.json"
SWEEP_SUMMARY_FILE = "sweep_summary.csv"


class SeedSummary(BaseModel):
    """Contents of summary.json for one seed."""

    model_config = ConfigDict(frozen=True)

    seed: int
    steps: int
    final_tau: float
    updates: int
    update_log: list[UpdateEvent]
    all_zero_fraction: float
    max_iou: float
    first50_mean_iou: typing.Optional[float]
    last50_mean_iou: typing.Optional[float]
    final_mean_iou: typing.Optional[float]
    zero_shot: dict[str, float]
    trained: dict[str, float]
    clamped_ratio_steps: int
    final_policy: dict[str, typing.Any]
    regime_reading: str = REGIME_BOUNDARY_READING


def seed_dir(out_dir: str | Path, seed: int) -> Path:
    return Path(out_dir) / f"seed_{seed}"


def build_scheduler(config: RunConfig) -> SchedulerState:
    stages = (
        config.reward.stages
        if config.schedule.kind == DecayKind.STAGED
        else None
    )
    return SchedulerState(config.schedule, stages=stages)


def run_seed(config: RunConfig, seed: int) -> SeedSummary:
    """Train one seed and write its trace and summary."""
    scheduler = build_scheduler(config)
    tracker = WindowStats(config.window.size, config.window.refresh)
    result = train_run(
        config.task,
        config.grpo,
        config.reward,
        scheduler,
        tracker,
        steps=config.steps,
        seed=seed,
    )

    zero_shot = summarize(
        evaluate_policy(
            result.initial_params,
            config.task,
            config.eval.samples,
            config.eval.seed,
        )
    )
    trained = summarize(
        evaluate_policy(
            result.final_params,
            config.task,
            config.eval.samples,
            config.eval.seed,
        )
    )

    summary = SeedSummary(
        seed=seed,
        steps=config.steps,
        final_tau=scheduler.tau,
        updates=len(result.updates),
        update_log=result.updates,
        all_zero_fraction=result.all_zero_fraction,
        max_iou=result.max_iou,
        first50_mean_iou=result.mean_iou(0, 50),
        last50_mean_iou=result.mean_iou(max(len(result.trace) - 50, 0)),
        final_mean_iou=result.final_mean_iou(100),
        zero_shot=zero_shot,
        trained=trained,
        clamped_ratio_steps=result.clamped_ratio_steps,
        final_policy=result.final_params.to_dict(),
    )

    directory = seed_dir(config.out_dir, seed)
    directory.mkdir(parents=True, exist_ok=True)
    write_trace(directory / TRACE_FILE, result.trace)
    with open(directory / SUMMARY_FILE, "w", encoding="utf-8") as f:
        json.dump(summary.model_dump(mode="json"), f, indent=2)
        f.write("\n")

    return summary


def read_summary(path: str | Path) -> SeedSummary:
    with open(path, "r", encoding="utf-8") as f:
        return SeedSummary.model_validate(json.load(f))


def write_manifest(config: RunConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": config.name,
        "code_version": __version__,
        "created_at": get_current_time().isoformat(),
        "seeds": config.seeds,
        "regime_reading": REGIME_BOUNDARY_READING,
        "config": config.model_dump(mode="json"),
    }
    path = out / MANIFEST_FILE
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return path


def _log_events(
    events: logging.Logger, config: RunConfig, summary: SeedSummary
) -> None:
    for update in summary.update_log:
        events.event(  # type: ignore[attr-defined]
            f"{config.name} seed={summary.seed} step={update.step} "
            f"tau={update.old_tau:.2f}->{update.new_tau:.2f} "
            f"mean_reward={update.mean_reward:.4f} "
            f"reward_std={update.reward_std:.4f} "
            f"iou_margin={update.iou_margin:.4f} "
            f"regime=({update.regime.delta}, {update.regime.min_reward}, "
            f"{update.regime.max_std}) [{summary.regime_reading}]"
        )
    events.event(  # type: ignore[attr-defined]
        f"{config.name} seed={summary.seed} finished: "
        f"updates={summary.updates} final_tau={summary.final_tau:.2f} "
        f"final_mean_iou={summary.final_mean_iou}"
    )


def run_experiment(
    config: RunConfig, workers: int = 1
) -> list[SeedSummary]:
    """
    Run every seed of config and write the run directory.

    The manifest and events.log are written by this process only; seeds
    run in worker processes when workers > 1.
    """
    write_manifest(config)
    events = setup_events_logger(config.out_dir)
    events.event(  # type: ignore[attr-defined]
        f"{config.name} started: schedule={config.schedule.kind.value} "
        f"seeds={config.seeds} steps={config.steps} "
        f"code_version={__version__}"
    )

    try:
        if workers > 1 and len(config.seeds) > 1:
            with concurrent.futures.ProcessPoolExecutor(workers) as pool:
                summaries = list(
                    pool.map(run_seed, repeat(config), config.seeds)
                )
        else:
            summaries = [run_seed(config, seed) for seed in config.seeds]

        for summary in summaries:
            _log_events(events, config, summary)
            logger.info(
                f"{config.name} seed {summary.seed}: {summary.updates} "
                f"updates, final tau {summary.final_tau:.2f}, final mean "
                f"IoU {summary.final_mean_iou}"
            )
    finally:
        close_events_logger()

    return summaries


def aggregate(
    variant: str, summaries: list[SeedSummary]
) -> dict[str, typing.Any]:
    df = pd.DataFrame(
        [
            {
                "final_mean_iou": s.final_mean_iou,
                "updates": s.updates,
                "final_tau": s.final_tau,
                "all_zero_fraction": s.all_zero_fraction,
                "trained_a50": s.trained["a50"],
            }
            for s in summaries
        ]
    )
    return {
        "variant": variant,
        "seeds": len(summaries),
        "final_mean_iou": df["final_mean_iou"].mean(),
        "final_mean_iou_std": df["final_mean_iou"].std(ddof=0),
        "updates": df["updates"].mean(),
        "final_tau": df["final_tau"].mean(),
        "all_zero_fraction": df["all_zero_fraction"].mean(),
        "trained_a50": df["trained_a50"].mean(),
    }


def render_sweep(recipe: str, summary: pd.DataFrame) -> None:
    table = Table(title=f"Sweep: {recipe}")
    table.add_column("Variant", justify="left", style="cyan")
    table.add_column("Final mean IoU", justify="right")
    table.add_column("Updates", justify="right")
    table.add_column("Final tau", justify="right")
    table.add_column("All-zero groups", justify="right")
    for row in summary.itertuples(index=False):
        table.add_row(
            str(row.variant),
            f"{row.final_mean_iou:.4f} ± {row.final_mean_iou_std:.4f}",
            f"{row.updates:.1f}",
            f"{row.final_tau:.2f}",
            f"{row.all_zero_fraction:.3f}",
        )
    console.print(table)


def run_sweep(
    recipe: str, base: RunConfig, workers: int = 1
) -> pd.DataFrame:
    """
    Run every variant of a named recipe under <out>/<variant>/ and write
    sweep_summary.csv.
    """
    rows = []
    for variant, config in expand_recipe(recipe, base):
        config = config.model_copy(
            update={"out_dir": str(Path(base.out_dir) / variant)}
        )
        summaries = run_experiment(config, workers)
        rows.append(aggregate(variant, summaries))

    summary = pd.DataFrame(rows)
    Path(base.out_dir).mkdir(parents=True, exist_ok=True)
    summary.to_csv(Path(base.out_dir) / SWEEP_SUMMARY_FILE, index=False)
    render_sweep(recipe, summary)
    return summary
