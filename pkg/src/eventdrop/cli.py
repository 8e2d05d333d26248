"""Command-line interface.

Subcommands: augment, convert, preview, bench, inspect.  Options can come
from a TOML config file (--config); CLI flags win over the file, and the
EVENTDROP_SEED environment variable is the fallback for --seed.

Exit codes: 0 success, 1 any sample failed, 2 configuration error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import click

from . import codec
from .augment import AugmentPolicy
from .errors import ConfigError, EventDropError
from .pipeline import (
    PipelineConfig,
    benchmark,
    inspect_stats,
    render_preview,
    run_dataset,
)

EXIT_SAMPLE_FAILED = 1
EXIT_CONFIG_ERROR = 2


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None


def _parse_policy(value: str) -> AugmentPolicy:
    parts = value.split(",")
    if len(parts) != 4:
        raise ConfigError("--policy needs 4 comma-separated probabilities")
    try:
        p_id, p_rand, p_time, p_area = (float(v) for v in parts)
    except ValueError as exc:
        raise ConfigError(f"bad --policy value: {exc}") from None
    try:
        return AugmentPolicy(p_id, p_rand, p_time, p_area)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _default_seed() -> int:
    env = os.environ.get("EVENTDROP_SEED")
    return int(env) if env else 0


def _build_config(config, **overrides) -> PipelineConfig:
    values = _load_config_file(config)
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    if isinstance(values.get("policy"), str):
        values["policy"] = _parse_policy(values["policy"])
    elif isinstance(values.get("policy"), list):
        values["policy"] = AugmentPolicy(*values["policy"])
    values.setdefault("master_seed", _default_seed())
    try:
        return PipelineConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _pipeline_options(fn):
    opts = [
        click.option("--config", type=click.Path(exists=True), default=None,
                     help="TOML config file; CLI flags override it."),
        click.option("--input", "input_root", type=click.Path(), default=None),
        click.option("--output", "output_root", type=click.Path(), default=None),
        click.option("--format", "input_format",
                     type=click.Choice(["atis_bin", "csv"]), default=None),
        click.option("--width", type=int, default=None),
        click.option("--height", type=int, default=None),
        click.option("--repr", "representation",
                     type=click.Choice(["event_frame", "event_count", "voxel_grid", "est"]),
                     default=None),
        click.option("--bins", "time_bins", type=int, default=None),
        click.option("--seed", "master_seed", type=int, default=None),
        click.option("--policy", default=None,
                     help="p_id,p_rand,p_time,p_area selection probabilities."),
        click.option("--out-format", "output_format",
                     type=click.Choice(["etns", "npy"]), default=None),
        click.option("--workers", type=int, default=None),
        click.option("--strict", is_flag=True, default=None),
        click.option("--preview", is_flag=True, default=None),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Event stream augmentation and tensor conversion."""


def _run(config, k, **overrides):
    try:
        cfg = _build_config(config, augmentations_per_sample=k, **overrides)
        manifest = run_dataset(cfg)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except EventDropError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_SAMPLE_FAILED)
    click.echo(f"{len(manifest.entries)} tensors written, "
               f"{len(manifest.failures)} failures")
    if manifest.failures:
        sys.exit(EXIT_SAMPLE_FAILED)


@main.command()
@_pipeline_options
@click.option("--k", type=int, default=1, show_default=True,
              help="Augmented variants per sample.")
def augment(config, k, **overrides):
    """Augment each sample K times and write tensors."""
    _run(config, k, **overrides)


@main.command()
@_pipeline_options
def convert(config, **overrides):
    """Convert samples to tensors without augmentation."""
    _run(config, 0, **overrides)


@main.command()
@click.argument("tensor_file", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None,
              help="PNG path; defaults to the tensor path with .png.")
def preview(tensor_file, out):
    """Render a tensor file as a PNG image."""
    path = Path(tensor_file)
    try:
        grid = codec.read_tensor(path.read_bytes())
        png = render_preview(grid)
    except EventDropError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_SAMPLE_FAILED)
    out_path = Path(out) if out else path.with_suffix(".png")
    out_path.write_bytes(png)
    click.echo(str(out_path))


@main.command()
@click.option("--events", "n_events", type=int, default=1_000_000, show_default=True)
@click.option("--bins", "time_bins", type=int, default=9, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
def bench(n_events, time_bins, workers, as_json):
    """Measure per-stage throughput on a synthetic stream."""
    report = benchmark(n_events=n_events, time_bins=time_bins, workers=workers)
    if as_json:
        click.echo(json.dumps(report, indent=2))
        return
    click.echo(f"{'stage':<8} {'name':<14} {'single ev/s':>14} {'multi ev/s':>14}")
    for row in report["rows"]:
        click.echo(f"{row['stage']:<8} {row['name']:<14} "
                   f"{row['events_per_s_single']:>14.3e} "
                   f"{row['events_per_s_multi']:>14.3e}")


@main.command()
@click.argument("sample", type=click.Path(exists=True))
@click.option("--format", "input_format",
              type=click.Choice(["atis_bin", "csv"]), default="atis_bin")
@click.option("--width", type=int, default=240, show_default=True)
@click.option("--height", type=int, default=180, show_default=True)
def inspect(sample, input_format, width, height):
    """Print event count and timing statistics for one sample file."""
    cfg = PipelineConfig(
        input_root=str(Path(sample).parent), output_root="/nonexistent-output",
        input_format=input_format, width=width, height=height,
    )
    try:
        stats = inspect_stats(Path(sample), cfg)
    except EventDropError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_SAMPLE_FAILED)
    click.echo(json.dumps(stats, indent=2))


if __name__ == "__main__":
    main()
