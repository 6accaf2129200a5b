"""gplabel CLI.

Commands:
    gplabel gen-data     Write a synthetic dataset (fig1, fig3 or long-tail preset)
    gplabel confmap      Confidence map of one classifier over a 2-D grid
    gplabel refine       Refined pseudo-labels for the unlabeled rows of a dataset
    gplabel demo-fig1    Label-propagation toy with pass/fail summary
    gplabel demo-fig3    Confidence-map toy with pass/fail summary
    gplabel bench        Classic vs incremental inverse update timings

Exit codes: 0 success, 1 runtime error or failed check, 2 usage error.
"""

from __future__ import annotations

import contextlib
import logging
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from gplabel.bench import BenchConfig, ThreadMode, complexity_sweep, format_ns, run_bench
from gplabel.demo import run_fig1, run_fig3
from gplabel.exceptions import GPLabelError
from gplabel.io import (
    ExperimentConfig,
    GridSpec,
    ModelKind,
    append_bench_rows,
    read_config,
    read_dataset,
    write_config,
    write_dataset,
    write_grid,
    write_refined,
)
from gplabel.pipeline import confidence_map, refine_unlabeled
from gplabel.toydata import Rounding, fig1_preset, fig3_preset, longtail_dataset

console = Console()
err_console = Console(stderr=True)

app = typer.Typer(
    name="gplabel",
    help="Online GP label refinement: datasets, confidence maps, demos and benchmarks",
    no_args_is_help=True,
)


class Preset(StrEnum):
    FIG1 = "fig1"
    FIG3 = "fig3"
    LONGTAIL = "longtail"


@app.callback()
def root(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging")] = False,
):
    """Online GP label refinement."""
    log = logging.getLogger("gplabel")
    log.handlers.clear()
    log.addHandler(RichHandler(console=err_console, show_path=False))
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False


@contextlib.contextmanager
def _exit_on_error():
    """Report GPLabelError on stderr and exit 1."""
    try:
        yield
    except GPLabelError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(1)


def _load_config(path: Path | None) -> ExperimentConfig:
    return read_config(path) if path is not None else ExperimentConfig()


def _grid(value: str) -> GridSpec:
    try:
        return GridSpec.parse(value)
    except ValueError as e:
        raise typer.BadParameter(str(e))


@app.command("gen-data")
def gen_data(
    preset: Annotated[Preset, typer.Option(help="Dataset layout")],
    out: Annotated[Path, typer.Option(help="Dataset file to write")],
    k: Annotated[int, typer.Option(min=2, help="Classes (longtail)")] = 10,
    n1: Annotated[int, typer.Option(min=1, help="Labeled majority count (longtail)")] = 1500,
    gamma: Annotated[float, typer.Option(min=1.0, help="Labeled imbalance ratio")] = 100.0,
    n1_unlabeled: Annotated[int, typer.Option(min=0, help="Unlabeled majority count")] = 0,
    gamma_unlabeled: Annotated[
        Optional[float], typer.Option(min=1.0, help="Unlabeled imbalance ratio (default: gamma)")
    ] = None,
    rounding: Annotated[Rounding, typer.Option(help="Count rounding rule")] = Rounding.FLOOR,
    std: Annotated[Optional[float], typer.Option(min=0.0, help="Cluster std")] = None,
    n_minority: Annotated[int, typer.Option(min=1, help="Minority count (fig3)")] = 25,
    seed: Annotated[int, typer.Option(help="Random seed")] = 0,
):
    """Write a synthetic dataset and print per-class counts."""
    if std is not None and std <= 0:
        raise typer.BadParameter("std must be > 0", param_hint="--std")
    with _exit_on_error():
        match preset:
            case Preset.FIG1:
                ds = fig1_preset(seed=seed)
            case Preset.FIG3:
                ds = fig3_preset(n_minority=n_minority, std=std or 0.35, seed=seed)
            case Preset.LONGTAIL:
                ds = longtail_dataset(
                    k,
                    n1,
                    gamma,
                    n1_unlabeled=n1_unlabeled,
                    gamma_unlabeled=gamma_unlabeled,
                    std=std or 0.15,
                    seed=seed,
                    rounding=rounding,
                )
        write_dataset(out, ds)
    for c, count in enumerate(ds.class_counts()):
        typer.echo(f"class {c}: {count}")
    if ds.num_unlabeled:
        typer.echo(f"unlabeled: {ds.num_unlabeled}")


@app.command()
def confmap(
    data: Annotated[Path, typer.Option(help="Dataset file (2-D features)")],
    grid: Annotated[GridSpec, typer.Option(parser=_grid, help="xmin,xmax,ymin,ymax,nx,ny")],
    out: Annotated[Path, typer.Option(help="Grid file to write")],
    config: Annotated[Optional[Path], typer.Option(help="Experiment config")] = None,
    model: Annotated[ModelKind, typer.Option(help="Classifier")] = ModelKind.GP,
):
    """Evaluate classifier confidence over a grid."""
    with _exit_on_error():
        cfg = _load_config(config)
        ds = read_dataset(data)
        result = confidence_map(ds, cfg, model, grid)
        write_grid(out, grid, result.conf, result.argmax)
    typer.echo(f"wrote {grid.nx * grid.ny} grid points to {out}")


@app.command()
def refine(
    data: Annotated[Path, typer.Option(help="Dataset with labeled and unlabeled rows")],
    out: Annotated[Path, typer.Option(help="Refined-label file to write")],
    config: Annotated[Optional[Path], typer.Option(help="Experiment config")] = None,
):
    """Refine pseudo-labels for the unlabeled rows."""
    with _exit_on_error():
        cfg = _load_config(config)
        ds = read_dataset(data)
        result = refine_unlabeled(ds, cfg)
        write_refined(out, result)
    typer.echo(f"{int(result.masked.sum())}/{result.masked.size} rows above tau={cfg.refine_tau}")


@app.command("demo-fig3")
def demo_fig3(
    out_dir: Annotated[Path, typer.Option(help="Output directory")],
    seed: Annotated[int, typer.Option(help="Random seed")] = 0,
):
    """Confidence maps for linear, similarity and GP on the four-cluster toy."""
    with _exit_on_error():
        result = run_fig3(seed)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_dataset(out_dir / "dataset.csv", result.dataset)
        write_config(out_dir / "config.txt", result.config)
        for kind, grid in result.grids.items():
            write_grid(out_dir / f"grid_{kind.value}.csv", grid.spec, grid.conf, grid.argmax)
        (out_dir / "summary.txt").write_text(result.summary.render(), encoding="utf-8")
    typer.echo(result.summary.render(), nl=False)
    if not result.summary.passed:
        raise typer.Exit(1)


@app.command("demo-fig1")
def demo_fig1(
    out_dir: Annotated[Path, typer.Option(help="Output directory")],
    seed: Annotated[int, typer.Option(help="Random seed")] = 0,
):
    """Label propagation with GP and similarity refinement on the region toy."""
    with _exit_on_error():
        result = run_fig1(seed)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_dataset(out_dir / "dataset.csv", result.dataset)
        for kind, refined in result.refined.items():
            write_refined(out_dir / f"refined_{kind.value}.csv", refined)
            write_config(out_dir / f"config_{kind.value}.txt", result.configs[kind])
        (out_dir / "summary.txt").write_text(result.summary.render(), encoding="utf-8")
    typer.echo(result.summary.render(), nl=False)
    if not result.summary.passed:
        raise typer.Exit(1)


def _sizes(value: str | None) -> list[int] | None:
    if value is None:
        return None
    try:
        sizes = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not sizes or min(sizes) < 2:
        raise typer.BadParameter("sweep sizes must be integers >= 2")
    return sizes


@app.command()
def bench(
    nq: Annotated[int, typer.Option("--nq", min=2, help="Bank size N_Q")] = 4096,
    b: Annotated[int, typer.Option("--b", min=1, help="Batch size B")] = 8,
    rounds: Annotated[int, typer.Option(min=1, help="Timed rounds")] = 20,
    warmup: Annotated[int, typer.Option(min=0, help="Untimed warmup rounds")] = 3,
    sweep: Annotated[
        Optional[str], typer.Option(help="Comma-separated N_Q values for a complexity sweep")
    ] = None,
    threads: Annotated[ThreadMode, typer.Option(help="BLAS threads")] = ThreadMode.SINGLE,
    seed: Annotated[int, typer.Option(help="Random seed")] = 0,
    out: Annotated[Optional[Path], typer.Option(help="Results file to append to")] = None,
):
    """Time full re-inversion against the incremental update."""
    sizes = _sizes(sweep)
    if b >= nq and sizes is None:
        raise typer.BadParameter(f"--b ({b}) must be < --nq ({nq})", param_hint="--b")
    if sizes is not None and b >= min(sizes):
        raise typer.BadParameter("--b must be below every sweep size", param_hint="--b")
    common = dict(rounds=rounds, warmup_rounds=warmup, threads=threads, seed=seed)

    with _exit_on_error():
        if sizes is None:
            report = run_bench(BenchConfig(bank_size=nq, batch_size=b, **common))
            typer.echo(report.to_kv(), nl=False)
            reports, kind = [report], "bench"
        else:
            result = complexity_sweep(sizes, batch_size=b, **common)
            reports, kind = result.rows, "sweep"
            table = Table("N_Q", "classic", "efficient", "speedup", title="complexity sweep")
            for r in reports:
                table.add_row(
                    str(r.config.bank_size),
                    format_ns(r.classic_ns_per_update),
                    format_ns(r.efficient_ns_per_update),
                    f"x{r.speedup:.2f}",
                )
            console.print(table)
            typer.echo(f"classic_slope={result.classic_slope!r}")
            typer.echo(f"efficient_slope={result.efficient_slope!r}")
        if out is not None:
            append_bench_rows(out, [r.to_row(kind) for r in reports])
    if not all(r.agreed for r in reports):
        typer.echo("Error: incremental and direct inverses disagreed", err=True)
        raise typer.Exit(1)


def main():
    app()
