"""Command-line front end.

Subcommands mirror the library modules: ``schedule`` builds timestep
schedules, ``variance`` computes variance maps, ``spatial-schedule``
builds per-pixel schedule tensors, ``embed`` turns a schedule iteration
into an embedding map, ``analyze`` scores a denoising trajectory per
frequency band, and ``simulate`` runs the three-strategy comparison.

Exit codes: 0 on success, 1 on input/output failures, 2 on usage and
validation errors. Set ``TSS_LOG`` to a level name (DEBUG, INFO, ...)
to raise log verbosity.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from tss import __version__
from tss.experiment import STRATEGIES, SimulateConfig, run_simulation
from tss.files import (
    load_image,
    load_spatial,
    load_trajectory,
    save_image_png,
    save_npy,
    save_spatial,
    save_trajectory,
    write_rows_csv,
    write_schedule_csv,
    write_schedule_json,
)
from tss.freq_analysis import BandPartition, band_masks, band_report, classify_patches, stratified_report
from tss.schedule_core import (
    SamplerParams,
    ScheduleKind,
    build_tds_schedule,
    edge_fraction,
    load_preset,
    preset_names,
    uniform_schedule,
)
from tss.spatial_schedule import (
    ProjectionBounds,
    build_spatial_schedule,
    resize_variance_to_grid,
    spatial_timestep_at,
)
from tss.time_embedding import build_embedding_map
from tss.variance_map import minmax_normalize, variance_map

log = logging.getLogger("tss")

_KIND_CHOICES = click.Choice([k.value for k in ScheduleKind])
_PRESET_CHOICES = click.Choice(preset_names())


@click.group()
@click.version_option(__version__, prog_name="tss")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for randomized operations.")
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("."),
    show_default=True,
    help="Directory receiving output artifacts.",
)
@click.option("--force", is_flag=True, help="Overwrite existing output files.")
@click.pass_context
def main(ctx: click.Context, seed: int, out: Path, force: bool) -> None:
    """Timestep scheduling and trajectory analysis toolkit."""
    level_name = os.environ.get("TSS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.WARNING))
    ctx.obj = {"seed": seed, "out": out, "force": force}


def _outputs(ctx: click.Context, *names: str) -> list[Path]:
    """Resolve output paths, creating the directory and honoring --force."""
    out: Path = ctx.obj["out"]
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise click.ClickException(f"cannot create output directory {out}: {exc}")
    paths = [out / name for name in names]
    if not ctx.obj["force"]:
        for p in paths:
            if p.exists():
                raise click.ClickException(
                    f"output {p} exists; pass --force to overwrite"
                )
    return paths


def _load_image_or_fail(path: str) -> np.ndarray:
    try:
        return load_image(path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot read image {path}: {exc}")


def _usage(exc: Exception) -> click.UsageError:
    return click.UsageError(str(exc))


@main.command()
@click.option("--preset", type=_PRESET_CHOICES, default=None, help="Named parameter ranges; the midpoints are used.")
@click.option("--kind", type=_KIND_CHOICES, default=None, help="Resampling family (defaults to polynomial with --preset).")
@click.option("--steps", "t_prime", type=int, required=True, help="Number of inference steps T'.")
@click.option("--T", "total_steps", type=int, default=1000, show_default=True, help="Training step count T.")
@click.option("--n", "power", type=float, default=None, help="Polynomial power n >= 1.")
@click.option("--a-frac", type=float, default=None, help="Transition point as a fraction of T.")
@click.option("--exp-slope", type=float, default=0.004, show_default=True, help="Slope of the exponential curve.")
@click.pass_context
def schedule(ctx, preset, kind, t_prime, total_steps, power, a_frac, exp_slope) -> None:
    """Build a timestep schedule and write it as JSON and CSV."""
    if preset is None and kind is None:
        raise click.UsageError("give --preset or --kind")
    n_default, a_default = 1.0, 0.5
    if preset is not None:
        n_default, a_default = load_preset(preset).midpoint()
        if kind is None:
            kind = ScheduleKind.POLYNOMIAL.value
    n = power if power is not None else n_default
    a = a_frac if a_frac is not None else a_default
    try:
        params = SamplerParams(total_steps, t_prime, n, a, ScheduleKind(kind), exp_slope)
        sched = build_tds_schedule(params)
    except ValueError as exc:
        raise _usage(exc)

    json_path, csv_path = _outputs(ctx, "schedule.json", "schedule.csv")
    write_schedule_json(sched, json_path)
    write_schedule_csv(sched, csv_path)

    frac = edge_fraction(sched.steps, total_steps)
    uni_frac = edge_fraction(uniform_schedule(total_steps, t_prime).steps, total_steps)
    click.echo(f"kind={params.kind.value} n={params.power} a_frac={params.transition_fraction} T={total_steps} T'={t_prime}")
    click.echo("steps_int: " + " ".join(str(int(s)) for s in sched.quantized_steps))
    click.echo(
        f"steps in outer fifths of [0, {total_steps}]: "
        f"{frac:.3f} of schedule (uniform baseline {uni_frac:.3f})"
    )
    click.echo(f"wrote {json_path} and {csv_path}")


@main.command()
@click.argument("image")
@click.option("--window", type=int, default=33, show_default=True, help="Odd local-variance window size.")
@click.option("--sigma", type=float, default=None, help="Blur sigma (default window/6).")
@click.pass_context
def variance(ctx, image, window, sigma) -> None:
    """Compute the normalized local-variance map of IMAGE."""
    if window < 1 or window % 2 == 0:
        raise click.UsageError(f"--window must be odd and positive, got {window}")
    if sigma is not None and sigma <= 0:
        raise click.UsageError(f"--sigma must be positive, got {sigma}")
    img = _load_image_or_fail(image)
    vmap = variance_map(img, window, sigma)
    npy_path, png_path = _outputs(ctx, "variance.npy", "variance.png")
    save_npy(npy_path, vmap)
    save_image_png(png_path, vmap)
    click.echo(
        f"variance map {vmap.shape[1]}x{vmap.shape[0]}: "
        f"mean {vmap.mean():.4f}, fraction above 0.5: {(vmap > 0.5).mean():.4f}"
    )
    click.echo(f"wrote {npy_path} and {png_path}")


def _resolve_bounds(preset, n_min, n_max, a_min, a_max) -> ProjectionBounds:
    explicit = [v is not None for v in (n_min, n_max, a_min, a_max)]
    if preset is not None:
        if any(explicit):
            raise click.UsageError("give either --preset or explicit bounds, not both")
        return ProjectionBounds.from_preset(load_preset(preset))
    if not all(explicit):
        raise click.UsageError("give --preset or all of --n-min --n-max --a-min --a-max")
    try:
        return ProjectionBounds(n_min, n_max, a_min, a_max)
    except ValueError as exc:
        raise _usage(exc)


@main.command(name="spatial-schedule")
@click.argument("image")
@click.option("--preset", type=_PRESET_CHOICES, default=None, help="Named parameter ranges.")
@click.option("--n-min", type=float, default=None)
@click.option("--n-max", type=float, default=None)
@click.option("--a-min", type=float, default=None)
@click.option("--a-max", type=float, default=None)
@click.option("--steps", "t_prime", type=int, required=True, help="Steps per pixel T'.")
@click.option("--T", "total_steps", type=int, default=1000, show_default=True)
@click.option("--kind", type=_KIND_CHOICES, default=ScheduleKind.POLYNOMIAL.value, show_default=True)
@click.option("--exp-slope", type=float, default=0.004, show_default=True)
@click.option("--grid-w", type=int, default=None, help="Feature-grid width (default: image width).")
@click.option("--grid-h", type=int, default=None, help="Feature-grid height (default: image height).")
@click.option("--window", type=int, default=33, show_default=True)
@click.option("--sigma", type=float, default=None)
@click.pass_context
def spatial_schedule(
    ctx, image, preset, n_min, n_max, a_min, a_max, t_prime, total_steps,
    kind, exp_slope, grid_w, grid_h, window, sigma,
) -> None:
    """Build the per-pixel schedule tensor for IMAGE."""
    if window < 1 or window % 2 == 0:
        raise click.UsageError(f"--window must be odd and positive, got {window}")
    if sigma is not None and sigma <= 0:
        raise click.UsageError(f"--sigma must be positive, got {sigma}")
    bounds = _resolve_bounds(preset, n_min, n_max, a_min, a_max)
    img = _load_image_or_fail(image)
    vmap = variance_map(img, window, sigma)
    height, width = vmap.shape
    gw = grid_w if grid_w is not None else width
    gh = grid_h if grid_h is not None else height
    try:
        grid = resize_variance_to_grid(vmap, gw, gh)
        smap = build_spatial_schedule(
            grid, bounds, total_steps, t_prime, ScheduleKind(kind), exp_slope
        )
    except ValueError as exc:
        raise _usage(exc)
    (npy_path,) = _outputs(ctx, "spatial_schedule.npy")
    save_spatial(smap, npy_path)
    click.echo(
        f"spatial schedule {smap.width}x{smap.height}x{smap.steps_per_pixel} "
        f"(T={total_steps}, kind={smap.kind.value})"
    )
    click.echo(f"wrote {npy_path} and {npy_path.with_suffix('.json')}")


@main.command()
@click.argument("schedule_npy")
@click.option("--k", type=int, required=True, help="Iteration index, 1-based.")
@click.option("--channels", type=int, required=True, help="Embedding width C (even).")
@click.option("--max-period", type=float, default=10000.0, show_default=True)
@click.pass_context
def embed(ctx, schedule_npy, k, channels, max_period) -> None:
    """Embed iteration K of a spatial schedule tensor as (H, W, C)."""
    try:
        smap = load_spatial(schedule_npy)
    except (OSError, ValueError, KeyError) as exc:
        raise click.ClickException(f"cannot read spatial schedule {schedule_npy}: {exc}")
    try:
        raster = spatial_timestep_at(smap, k)
    except IndexError as exc:
        raise _usage(exc)
    try:
        emap = build_embedding_map(raster, channels, max_period)
    except ValueError as exc:
        raise _usage(exc)
    (npy_path,) = _outputs(ctx, "embedding.npy")
    save_npy(npy_path, emap)
    click.echo(f"embedding map {emap.shape[1]}x{emap.shape[0]}x{emap.shape[2]}")
    click.echo(f"wrote {npy_path}")


@main.command()
@click.argument("frames")
@click.option("--low-cut", type=float, default=1.0 / 3.0, show_default="1/3")
@click.option("--high-cut", type=float, default=2.0 / 3.0, show_default="2/3")
@click.option("--patch", type=int, default=128, show_default=True, help="Patch size for the stratified report.")
@click.option("--steps-file", type=str, default=None, help="JSON sidecar with timestep labels (NPY stacks).")
@click.pass_context
def analyze(ctx, frames, low_cut, high_cut, patch, steps_file) -> None:
    """Score a trajectory (frame directory or NPY stack) per band.

    Writes analysis.csv with per-step SNR, residual noise power, and
    stepwise noise deltas, plus analysis_by_class.csv stratified over
    patch texture classes when the frames are at least one patch large.
    """
    try:
        partition = BandPartition(low_cut, high_cut)
    except ValueError as exc:
        raise _usage(exc)
    if patch < 1:
        raise click.UsageError(f"--patch must be positive, got {patch}")
    try:
        traj = load_trajectory(frames, steps_file)
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot load frames from {frames}: {exc}")

    height, width = traj.frames.shape[1:]
    masks = band_masks(width, height, partition)
    rows = band_report(traj, masks)
    (csv_path,) = _outputs(ctx, "analysis.csv")
    write_rows_csv(
        csv_path, ["step", "band", "snr_db", "noise_power", "delta_noise"], rows
    )
    click.echo(f"wrote {csv_path} ({len(rows)} rows)")

    if height >= patch and width >= patch:
        # classes come from the reference frame, rescaled into [0, 1]
        classes = classify_patches(minmax_normalize(traj.reference), patch)
        patch_masks = band_masks(patch, patch, partition)
        srows = stratified_report(traj, classes, patch_masks)
        (class_path,) = _outputs(ctx, "analysis_by_class.csv")
        write_rows_csv(
            class_path,
            ["class", "step", "band", "snr_db", "noise_power", "delta_noise"],
            srows,
        )
        click.echo(f"wrote {class_path} ({len(srows)} rows)")
    else:
        click.echo(
            f"frames {width}x{height} are smaller than one {patch}x{patch} patch; "
            "skipping the stratified report"
        )


@main.command()
@click.argument("config")
@click.pass_context
def simulate(ctx, config) -> None:
    """Run the three-strategy comparison described by a CONFIG JSON file.

    Emits comparison.csv (per-band SNR of each strategy's final frame
    against the clean target), comparison_by_class.csv (high-band SNR
    per patch class), and one frame stack per strategy.
    """
    try:
        text = Path(config).read_text()
    except OSError as exc:
        raise click.ClickException(f"cannot read config {config}: {exc}")
    try:
        cfg = SimulateConfig(**json.loads(text))
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"config is not valid JSON: {exc}")
    except ValidationError as exc:
        raise click.UsageError(f"invalid config: {exc}")

    try:
        result = run_simulation(cfg, seed=ctx.obj["seed"])
    except (ValueError, KeyError) as exc:
        raise _usage(exc)

    names = ["comparison.csv", "comparison_by_class.csv"]
    names += [f"frames_{s}.npy" for s in STRATEGIES]
    paths = _outputs(ctx, *names)
    write_rows_csv(
        paths[0],
        ["strategy", "low_snr_db", "medium_snr_db", "high_snr_db"],
        result["comparison"],
    )
    write_rows_csv(paths[1], ["strategy", "class", "high_snr_db"], result["by_class"])
    for name, path in zip(STRATEGIES, paths[2:]):
        save_trajectory(result["trajectories"][name], path)

    click.echo(f"seed={result['seed']} T={cfg.T} T'={cfg.T_prime} preset={cfg.preset}")
    click.echo("strategy  low_db  medium_db  high_db")
    for row in result["comparison"]:
        click.echo(
            f"{row['strategy']:<9} {row['low_snr_db']:>7.2f} {row['medium_snr_db']:>9.2f} "
            f"{row['high_snr_db']:>8.2f}"
        )
    for path in paths:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
