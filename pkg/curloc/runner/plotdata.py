import typing
from pathlib import Path


import pandas as pd


from curloc.errors import InputError
from curloc.runner.traces import read_trace_frame

DEFAULT_SMOOTHING_WINDOW = 10


def trace_label(path: Path) -> str:
    # runs/<variant>/seed_<n>/trace.csv -> <variant>/seed_<n>
    if path.stem == "trace" and len(path.parts) >= 3:
        return "/".join(path.parts[-3:-1])
    return path.stem


def plot_series(
    df: pd.DataFrame, window: int, prefix: str = ""
) -> pd.DataFrame:
    """
    Long-format reward and tau series of one trace. Rewards are smoothed
    with a trailing moving average; tau is passed through.
    """
    reward = df["group_mean_reward"].rolling(window, min_periods=1).mean()
    frames = [
        pd.DataFrame(
            {"step": df["step"], "series": f"{prefix}reward", "value": reward}
        ),
        pd.DataFrame(
            {"step": df["step"], "series": f"{prefix}tau", "value": df["tau"]}
        ),
    ]
    return pd.concat(frames, ignore_index=True)


def emit_plotdata(
    trace_paths: typing.Sequence[str | Path],
    out: str | Path,
    window: int = DEFAULT_SMOOTHING_WINDOW,
    labels: typing.Optional[typing.Sequence[str]] = None,
) -> pd.DataFrame:
    if window < 1:
        raise InputError(f"Smoothing window must be at least 1, got {window}")
    if not trace_paths:
        raise InputError("No trace files given")

    paths = [Path(p) for p in trace_paths]
    if labels is None:
        labels = [trace_label(p) for p in paths]
    if len(labels) != len(paths):
        raise InputError(
            f"{len(labels)} labels given for {len(paths)} trace files"
        )
    if len(set(labels)) != len(labels):
        raise InputError(f"Trace labels must be unique, got {list(labels)}")

    frames = []
    for path, label in zip(paths, labels):
        prefix = "" if len(paths) == 1 else f"{label}:"
        frames.append(plot_series(read_trace_frame(path), window, prefix))
    data = pd.concat(frames, ignore_index=True)

    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(f"# smoothing: moving average window={window}\n")
        data.to_csv(f, index=False)
    return data
