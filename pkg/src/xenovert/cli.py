"""Command-line front end: shift simulations, tabular experiments, quantization.

Artifacts embed their full config and seeds, so re-running a command with the
same flags reproduces its outputs byte for byte.  Exit codes: 0 on success,
2 on validation errors, 1 on runtime failures.  The XENOVERT_THREADS
environment variable caps the worker pool used for multi-seed fan-out.
"""

from __future__ import annotations

import functools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from .distgen import ShiftSchedule, parse_dist, run_univariate
from .mlp import TrainConfig
from .pipeline import DATASETS, run_experiment
from .qtree import Xenovert, XenovertConfig, grow

DEFAULT_COVARIATE_ALPHA = 1e-3


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _max_workers(n_jobs: int) -> int:
    raw = os.environ.get("XENOVERT_THREADS")
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise click.UsageError(f"XENOVERT_THREADS must be an integer, got {raw!r}")
        if cap < 1:
            raise click.UsageError(f"XENOVERT_THREADS must be >= 1, got {cap}")
    return max(1, min(n_jobs, cap))


def _guarded(fn):
    """Map ValueError to exit 2 (validation) and anything else to exit 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc
        except Exception as exc:  # noqa: BLE001 - the CLI boundary
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _dist_option(ctx, param, value):
    try:
        return parse_dist(value)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc


def _mean_sd(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def _csv_text(header: dict, columns: str, rows) -> str:
    lines = [f"# {json.dumps(header, sort_keys=True)}", columns]
    lines.extend(rows)
    return "\n".join(lines) + "\n"


@click.group()
def main() -> None:
    """Adaptive quantile-tree experiments and stream quantization."""


@main.command()
@click.option("--dist-source", default="uniform(0,1)", callback=_dist_option, show_default=True, help="Source distribution, e.g. 'normal(2,4)'.")
@click.option("--dist-target", default="uniform(5,8)", callback=_dist_option, show_default=True, help="Target distribution.")
@click.option("--shift", type=click.Choice(["instant", "gradual", "recurring"]), default="instant", show_default=True)
@click.option("--levels", type=click.IntRange(1, 30), default=5, show_default=True)
@click.option("--alpha", type=float, default=1e-5, show_default=True, help="Boundary learning rate.")
@click.option("--theta", type=float, default=0.99, show_default=True, help="Velocity decay.")
@click.option("--initial-q", type=float, default=0.0, show_default=True)
@click.option("--steps", type=click.IntRange(1), default=200_000, show_default=True, help="Draws per phase; a run lasts 2*steps.")
@click.option("--t-shift", type=click.IntRange(1), default=None, help="Instant cutover step (default: steps).")
@click.option("--t-start", type=click.IntRange(0), default=None, help="Gradual ramp start (default: steps//2).")
@click.option("--t-end", type=click.IntRange(1), default=None, help="Gradual ramp end (default: 3*steps//2).")
@click.option("--period", type=click.IntRange(1), default=None, help="Recurring cycle length (default: steps//4).")
@click.option("--duty", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.5, show_default=True, help="Recurring: fraction of each cycle on the target.")
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed; run i uses seed+i.")
@click.option("--seeds", "n_seeds", type=click.IntRange(1), default=1, show_default=True, help="Number of independent runs.")
@click.option("--hi-window", type=click.IntRange(1), default=1000, show_default=True)
@click.option("--record-every", type=click.IntRange(1), default=500, show_default=True)
@click.option("--plateau-frac", type=click.FloatRange(0.0, 1.0, min_open=True), default=0.1, show_default=True, help="Trailing fraction pooled into the plateau score.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True)
@_guarded
def univariate(
    dist_source,
    dist_target,
    shift,
    levels,
    alpha,
    theta,
    initial_q,
    steps,
    t_shift,
    t_start,
    t_end,
    period,
    duty,
    seed,
    n_seeds,
    hi_window,
    record_every,
    plateau_frac,
    out,
) -> None:
    """Stream a shifting distribution through one tree; write HI trajectories.

    Emits one trajectory CSV per seed plus a summary JSON with the mean and
    SD of the plateau HI score across seeds.
    """
    config = XenovertConfig(
        levels=levels, learning_rate=alpha, velocity_decay=theta, initial_q=initial_q
    )
    horizon = 2 * steps
    if shift == "instant":
        schedule = ShiftSchedule.instant(dist_source, dist_target, horizon, t_shift or steps)
    elif shift == "gradual":
        schedule = ShiftSchedule.gradual(
            dist_source,
            dist_target,
            horizon,
            steps // 2 if t_start is None else t_start,
            3 * steps // 2 if t_end is None else t_end,
        )
    else:
        schedule = ShiftSchedule.recurring(
            dist_source, dist_target, horizon, period or max(1, steps // 4), duty
        )
    echo = {
        "command": "univariate",
        "schedule": schedule.describe(),
        "levels": levels,
        "alpha": alpha,
        "theta": theta,
        "initial_q": initial_q,
        "steps_per_phase": steps,
        "hi_window": hi_window,
        "record_every": record_every,
        "plateau_frac": plateau_frac,
        "base_seed": seed,
        "n_seeds": n_seeds,
    }
    seed_list = [seed + i for i in range(n_seeds)]

    def one(s: int):
        return run_univariate(
            schedule,
            config,
            hi_window=hi_window,
            record_every=record_every,
            seed=s,
            plateau_frac=plateau_frac,
        )

    workers = _max_workers(n_seeds)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seed_list))
    else:
        results = [one(s) for s in seed_list]

    out.mkdir(parents=True, exist_ok=True)
    for s, res in zip(seed_list, results):
        rows = (
            f"{t},{float(hi)!r}" for t, hi in zip(res.record_t.tolist(), res.record_hi.tolist())
        )
        _write_atomic(
            out / f"univariate_seed{s}.csv", _csv_text({**echo, "seed": s}, "t,hi_score", rows)
        )
    plateaus = [float(r.plateau_hi) for r in results]
    mean, sd = _mean_sd(plateaus)
    summary = {
        **echo,
        "seeds": seed_list,
        "plateau_hi": {
            "per_seed": plateaus,
            "mean": mean,
            "sd": sd,
            "sd_note": "single seed, SD not estimable" if n_seeds == 1 else None,
        },
    }
    _write_atomic(out / "univariate_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    click.echo(f"plateau HI over {n_seeds} seed(s): {mean:.4f} +/- {sd:.4f}")
    click.echo(f"wrote {out / 'univariate_summary.json'}")


@main.command()
@click.option("--dataset", type=click.Choice(sorted(DATASETS)), required=True)
@click.option("--csv", "csv_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Source CSV for non-bundled datasets.")
@click.option("--levels", type=click.IntRange(1, 30), default=5, show_default=True)
@click.option("--alpha", type=float, default=DEFAULT_COVARIATE_ALPHA, show_default=True, help="Boundary learning rate for the feature trees.")
@click.option("--theta", type=float, default=0.99, show_default=True)
@click.option("--passes", type=click.IntRange(0), default=50, show_default=True, help="Shuffled passes over the training side when fitting trees.")
@click.option("--adapt-passes", type=click.IntRange(0), default=50, show_default=True, help="Shuffled passes over the test side before scoring; 0 freezes the trees.")
@click.option("--epochs", type=click.IntRange(1), default=2000, show_default=True)
@click.option("--plateau-patience", type=click.IntRange(1), default=None, help="Stop training after this many epochs without relative improvement.")
@click.option("--batch-size", type=click.IntRange(1), default=200, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True, help="Network learning rate.")
@click.option("--sigma-frac", type=float, default=0.01, show_default=True, help="Tie-breaking noise scale, as a fraction of column std.")
@click.option("--normalize-quantized/--no-normalize-quantized", default=False, show_default=True, help="Feed quantized features as index / 2^levels.")
@click.option("--seeds", "n_seeds", type=click.IntRange(1), default=30, show_default=True)
@click.option("--base-seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True)
@_guarded
def covariate(
    dataset,
    csv_path,
    levels,
    alpha,
    theta,
    passes,
    adapt_passes,
    epochs,
    plateau_patience,
    batch_size,
    lr,
    sigma_frac,
    normalize_quantized,
    n_seeds,
    base_seed,
    out,
) -> None:
    """Train raw-feature and quantized-feature networks; score under shift.

    Emits a report JSON with per-arm mean and SD plus a per-seed CSV.
    """
    xcfg = XenovertConfig(levels=levels, learning_rate=alpha, velocity_decay=theta)
    traincfg = TrainConfig(
        batch_size=batch_size,
        epochs=epochs,
        learning_rate=lr,
        plateau_patience=plateau_patience,
    )
    report = run_experiment(
        dataset,
        xcfg,
        traincfg,
        n_seeds=n_seeds,
        csv_path=csv_path,
        passes=passes,
        adapt_passes=adapt_passes,
        sigma_frac=sigma_frac,
        normalize_quantized=normalize_quantized,
        base_seed=base_seed,
        max_workers=_max_workers(n_seeds),
    )
    if n_seeds == 1:
        report["sd_note"] = "single seed, SD not estimable"
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(out / f"covariate_{dataset}.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    header = {k: report[k] for k in ("dataset", "task", "metric", "config", "seeds")}
    per_seed = {arm["name"]: arm["per_seed"] for arm in report["arms"]}
    rows = (
        f"{s},{per_seed['raw_mlp'][i]!r},{per_seed['xenovert_mlp'][i]!r}"
        for i, s in enumerate(report["seeds"])
    )
    _write_atomic(
        out / f"covariate_{dataset}_seeds.csv",
        _csv_text(header, "seed,raw_mlp,xenovert_mlp", rows),
    )
    for arm in report["arms"]:
        click.echo(
            f"{arm['name']}: {report['metric']} {arm['mean']:.4f} +/- {arm['sd']:.4f} "
            f"over {n_seeds} seed(s)"
        )
    click.echo(f"wrote {out / f'covariate_{dataset}.json'}")


@main.command()
@click.option("--levels", type=click.IntRange(1, 30), default=5, show_default=True)
@click.option("--alpha", type=float, default=1e-5, show_default=True)
@click.option("--theta", type=float, default=0.99, show_default=True)
@click.option("--initial-q", type=float, default=0.0, show_default=True)
@click.option("--snapshot-in", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="Resume from a saved tree; overrides the config flags.")
@click.option("--snapshot-out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Save the adapted tree after the stream ends.")
@click.argument("stream", type=click.File("r"), default="-", required=False)
@_guarded
def quantize(levels, alpha, theta, initial_q, snapshot_in, snapshot_out, stream) -> None:
    """Read one real per line, adapt the tree on it, print its interval index.

    Reads stdin by default.  Blank lines are skipped; anything else that is
    not a finite real fails with its line number before any output is written.
    """
    if snapshot_in is not None:
        tree = Xenovert.restore(snapshot_in.read_text(encoding="utf-8"))
    else:
        tree = grow(
            XenovertConfig(
                levels=levels, learning_rate=alpha, velocity_decay=theta, initial_q=initial_q
            )
        )
    values = []
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            x = float(text)
        except ValueError as exc:
            raise click.UsageError(f"line {lineno}: cannot parse {text!r} as a real number") from exc
        if not math.isfinite(x):
            raise click.UsageError(f"line {lineno}: value must be finite, got {text!r}")
        values.append(x)
    for x in values:
        tree.update(x)
        click.echo(tree.convert(x))
    if snapshot_out is not None:
        if snapshot_out.parent != Path(""):
            snapshot_out.parent.mkdir(parents=True, exist_ok=True)
        _write_atomic(snapshot_out, tree.snapshot())


if __name__ == "__main__":
    main()
