"""Batch dataset processing.

Walks an input tree of event files, augments each sample K times, builds
the configured tensor representation, and writes one tensor file per
(sample, variant) into a mirrored output tree.  Everything is driven by
seeds derived from (master seed, sample path, variant index), so the
output is byte-identical regardless of worker count or scheduling.
"""

from __future__ import annotations

import dataclasses
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from . import codec
from .augment import AppliedOpRecord, AugmentPolicy, DropOp, apply_policy, drop_by_area, drop_by_time, random_drop
from .core import EventStream, SensorGeometry, stream_stats
from .errors import ConfigError, EventDropError, UnsupportedShape
from .represent import GridConfig, TensorGrid, build_est, build_event_count, build_event_frame, build_voxel_grid, flatten_channels
from .rng import derive_rng, derive_seed

INPUT_FORMATS = ("atis_bin", "csv")
REPRESENTATIONS = ("event_frame", "event_count", "voxel_grid", "est")
OUTPUT_FORMATS = ("etns", "npy")

_INPUT_SUFFIX = {"atis_bin": ".bin", "csv": ".csv"}
_OUTPUT_SUFFIX = {"etns": ".etns", "npy": ".npy"}

_BUILDERS = {
    "event_frame": lambda s, cfg: build_event_frame(s),
    "event_count": lambda s, cfg: build_event_count(s),
    "voxel_grid": build_voxel_grid,
    "est": build_est,
}


@dataclass(frozen=True)
class PipelineConfig:
    input_root: str
    output_root: str
    input_format: str = "atis_bin"
    width: int = 240
    height: int = 180
    representation: str = "voxel_grid"
    time_bins: int = 9
    augmentations_per_sample: int = 0
    master_seed: int = 0
    policy: AugmentPolicy = field(default_factory=AugmentPolicy)
    output_format: str = "etns"
    preview: bool = False
    workers: int = 1
    strict: bool = False

    def __post_init__(self):
        if self.input_format not in INPUT_FORMATS:
            raise ConfigError(f"unknown input format {self.input_format!r}")
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(f"unknown representation {self.representation!r}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.augmentations_per_sample < 0:
            raise ConfigError("augmentations per sample must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.time_bins < 1:
            raise ConfigError("time_bins must be >= 1")
        if Path(self.input_root).resolve() == Path(self.output_root).resolve():
            raise ConfigError("input and output roots must differ")

    @property
    def geometry(self) -> SensorGeometry:
        return SensorGeometry(self.width, self.height)

    @property
    def grid_config(self) -> GridConfig:
        return GridConfig(time_bins=self.time_bins)


@dataclass
class ManifestEntry:
    input_path: str
    variant: int  # 0 = unaugmented, 1..K = augmented
    seed: Optional[int]
    applied: Optional[AppliedOpRecord]
    output_path: str
    events_before: int
    events_after: int

    def to_json(self) -> dict:
        return {
            "input_path": self.input_path,
            "variant": self.variant,
            "seed": self.seed,
            "applied": self.applied.to_json() if self.applied else None,
            "output_path": self.output_path,
            "events_before": self.events_before,
            "events_after": self.events_after,
        }


@dataclass
class RunManifest:
    config: PipelineConfig
    entries: list[ManifestEntry]
    failures: list[dict]

    # fields that change the produced tensors; invocation-specific ones
    # (roots, workers, strict) are deliberately left out so reruns with a
    # different worker count produce byte-identical output trees
    _SETTINGS = ("input_format", "width", "height", "representation",
                 "time_bins", "augmentations_per_sample", "master_seed",
                 "output_format", "preview")

    def to_json(self) -> dict:
        settings = {k: getattr(self.config, k) for k in self._SETTINGS}
        settings["policy"] = dataclasses.asdict(self.config.policy)
        return {
            "settings": settings,
            "entries": [e.to_json() for e in self.entries],
            "failures": self.failures,
        }


def load_sample(path: Path, cfg: PipelineConfig) -> EventStream:
    if cfg.input_format == "atis_bin":
        return codec.read_atis_bin(path.read_bytes(), cfg.geometry)
    return codec.read_csv(path.read_text(), cfg.geometry)


def discover_samples(cfg: PipelineConfig) -> list[Path]:
    root = Path(cfg.input_root)
    if not root.is_dir():
        raise ConfigError(f"input root {root} is not a directory")
    suffix = _INPUT_SUFFIX[cfg.input_format]
    return sorted(p.relative_to(root) for p in root.rglob(f"*{suffix}"))


def _output_path(cfg: PipelineConfig, rel: Path, k: int) -> Path:
    stem = rel.with_suffix("").name
    if k > 0:
        stem = f"{stem}_aug{k}"
    return Path(cfg.output_root) / rel.parent / (stem + _OUTPUT_SUFFIX[cfg.output_format])


def process_sample(cfg: PipelineConfig, rel: Path) -> tuple[list[ManifestEntry], list[dict]]:
    """Emit the unaugmented tensor plus K augmented variants for one sample.

    Returns (entries, failures); per-variant errors do not abort the
    remaining variants.
    """
    entries: list[ManifestEntry] = []
    failures: list[dict] = []
    rel_key = rel.as_posix()
    try:
        stream = load_sample(Path(cfg.input_root) / rel, cfg)
    except (EventDropError, OSError) as exc:
        return [], [{"input_path": rel_key, "variant": v, "error": str(exc)}
                    for v in range(cfg.augmentations_per_sample + 1)]

    for k in range(cfg.augmentations_per_sample + 1):
        try:
            if k == 0:
                out_stream, record, seed = stream, None, None
            else:
                seed = derive_seed(cfg.master_seed, rel_key, k)
                out_stream, record = apply_policy(
                    stream, cfg.policy, derive_rng(cfg.master_seed, rel_key, k))
            grid = flatten_channels(_BUILDERS[cfg.representation](out_stream, cfg.grid_config))
            out_path = _output_path(cfg, rel, k)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_bytes(codec.write_tensor(grid, cfg.output_format))
            if cfg.preview:
                out_path.with_suffix(".png").write_bytes(render_preview(grid))
            entries.append(ManifestEntry(
                input_path=rel_key, variant=k, seed=seed, applied=record,
                output_path=out_path.relative_to(cfg.output_root).as_posix(),
                events_before=len(stream), events_after=len(out_stream),
            ))
        except EventDropError as exc:
            failures.append({"input_path": rel_key, "variant": k, "error": str(exc)})
    return entries, failures


def run_dataset(cfg: PipelineConfig) -> RunManifest:
    """Process every sample under the input root; writes manifest and audit log."""
    samples = discover_samples(cfg)
    if not samples:
        raise ConfigError(f"no {cfg.input_format} samples under {cfg.input_root}")
    Path(cfg.output_root).mkdir(parents=True, exist_ok=True)

    if cfg.workers == 1:
        results = [process_sample(cfg, rel) for rel in samples]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(process_sample, [cfg] * len(samples), samples))

    entries: list[ManifestEntry] = []
    failures: list[dict] = []
    for sample_entries, sample_failures in results:
        entries.extend(sample_entries)
        failures.extend(sample_failures)
    entries.sort(key=lambda e: (e.input_path, e.variant))
    failures.sort(key=lambda f: (f["input_path"], f["variant"]))

    manifest = RunManifest(cfg, entries, failures)
    out_root = Path(cfg.output_root)
    (out_root / "manifest.json").write_text(
        json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n")
    with open(out_root / "audit.ndjson", "w") as fh:
        for entry in entries:
            if entry.applied is not None:
                rec = {"input_path": entry.input_path, "variant": entry.variant}
                rec.update(entry.applied.to_json())
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    if failures and cfg.strict:
        raise EventDropError(f"{len(failures)} variants failed in strict mode")
    return manifest


def render_preview(grid: TensorGrid) -> bytes:
    """Render a grid as a deterministic PNG.

    Single-channel content becomes linear grayscale scaled by the maximum
    cell; two-polarity content renders positive events red and negative
    events blue on a white background.  Time/channel axes are summed.
    """
    data = grid.data.astype(np.float64)
    axes = grid.axes
    while data.ndim > 2 and axes[0] in ("time_bin", "channel"):
        if axes[0] == "channel" and data.shape[0] == 2:
            axes = ("polarity",) + axes[1:]
            continue
        data = data.sum(axis=0)
        axes = axes[1:]
    if data.ndim == 2:
        peak = data.max()
        scaled = (data / peak * 255.0) if peak > 0 else data
        img = Image.fromarray(scaled.astype(np.uint8), mode="L")
    elif data.ndim == 3 and data.shape[0] == 2:
        neg, pos = data[0], data[1]
        peak = max(neg.max(), pos.max())
        if peak == 0:
            peak = 1.0
        h, w = neg.shape
        rgb = np.full((h, w, 3), 255.0)
        # positive pulls toward red (drop G+B), negative toward blue (drop R+G)
        rgb[:, :, 0] -= neg / peak * 255.0
        rgb[:, :, 1] -= (pos + neg) / peak * 255.0
        rgb[:, :, 2] -= pos / peak * 255.0
        img = Image.fromarray(np.clip(rgb, 0, 255).astype(np.uint8), mode="RGB")
    else:
        raise UnsupportedShape(f"cannot render axes {grid.axes} shape {grid.shape}")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _synthetic_stream(n: int, geometry: SensorGeometry, seed: int = 7) -> EventStream:
    gen = np.random.Generator(np.random.PCG64(seed))
    t = np.sort(gen.integers(0, 1_000_000, n))
    return EventStream.from_columns(
        gen.integers(0, geometry.width, n),
        gen.integers(0, geometry.height, n),
        t,
        gen.choice([-1, 1], n),
        geometry,
    )


def benchmark(n_events: int = 1_000_000, time_bins: int = 9,
              workers: int = 1, geometry: SensorGeometry | None = None) -> dict:
    """Measure events/second per stage on a synthetic stream.

    Returns a report dict with one row per (stage, representation); the
    text rendering is left to the CLI.
    """
    from concurrent.futures import ThreadPoolExecutor

    geometry = geometry or SensorGeometry(240, 180)
    stream = _synthetic_stream(n_events, geometry)
    raw = codec.write_atis_bin(stream)  # synthetic timestamps stay under 2^23
    cfg = GridConfig(time_bins=time_bins)
    rng = derive_rng(1, "bench", 0)

    stages = {
        ("decode", "atis_bin"): lambda: codec.read_atis_bin(raw, geometry),
        ("drop", "random_drop"): lambda: random_drop(stream, 0.5, rng),
        ("drop", "drop_by_time"): lambda: drop_by_time(stream, 0.5, rng),
        ("drop", "drop_by_area"): lambda: drop_by_area(stream, 0.25, rng),
        ("build", "event_frame"): lambda: build_event_frame(stream),
        ("build", "event_count"): lambda: build_event_count(stream),
        ("build", "voxel_grid"): lambda: build_voxel_grid(stream, cfg),
        ("build", "est"): lambda: build_est(stream, cfg),
    }

    rows = []
    for (stage, name), fn in stages.items():
        fn()  # warm-up
        start = time.perf_counter()
        fn()
        single = n_events / (time.perf_counter() - start)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                start = time.perf_counter()
                list(pool.map(lambda _: fn(), range(workers)))
                multi = workers * n_events / (time.perf_counter() - start)
        else:
            multi = single
        rows.append({"stage": stage, "name": name, "threads": workers,
                     "events_per_s_single": single, "events_per_s_multi": multi})
    return {"n_events": n_events, "time_bins": time_bins, "workers": workers,
            "rows": rows}


def inspect_stats(path: Path, cfg: PipelineConfig) -> dict:
    stats = stream_stats(load_sample(path, cfg))
    return dataclasses.asdict(stats)
