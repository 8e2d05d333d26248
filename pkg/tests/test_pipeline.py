import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from eventdrop import codec
from eventdrop.cli import main as cli_main
from eventdrop.core import SensorGeometry
from eventdrop.errors import ConfigError, UnsupportedShape
from eventdrop.pipeline import (
    PipelineConfig,
    benchmark,
    render_preview,
    run_dataset,
)
from eventdrop.represent import TensorGrid
from eventdrop.rng import derive_rng, derive_seed

from oracles import random_stream

W, H = 64, 48


def make_dataset(root: Path, n_samples: int, events_per_sample: int = 400) -> None:
    gen = np.random.Generator(np.random.PCG64(123))
    for i in range(n_samples):
        klass = root / f"class_{i % 3}"
        klass.mkdir(parents=True, exist_ok=True)
        s = random_stream(gen, events_per_sample, W, H, t_max=1 << 22)
        (klass / f"sample_{i:03d}.bin").write_bytes(codec.write_atis_bin(s))


def tree_digest(root: Path) -> dict:
    return {
        p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


def base_config(in_root, out_root, **kw):
    defaults = dict(
        input_root=str(in_root), output_root=str(out_root),
        input_format="atis_bin", width=W, height=H,
        representation="voxel_grid", time_bins=5,
        augmentations_per_sample=2, master_seed=77,
    )
    defaults.update(kw)
    return PipelineConfig(**defaults)


# --- seed derivation -------------------------------------------------------

def test_derive_seed_deterministic():
    assert derive_seed(1, "a/b.bin", 2) == derive_seed(1, "a/b.bin", 2)
    a = derive_rng(1, "a/b.bin", 2).generator.random()
    b = derive_rng(1, "a/b.bin", 2).generator.random()
    assert a == b


def test_derive_seed_varies_with_inputs():
    base = derive_seed(1, "a/b.bin", 0)
    assert derive_seed(2, "a/b.bin", 0) != base
    assert derive_seed(1, "a/c.bin", 0) != base
    assert derive_seed(1, "a/b.bin", 1) != base


def test_derive_seed_no_collisions_bulk():
    seeds = {derive_seed(9, f"sample_{i}.bin", k)
             for i in range(20_000) for k in range(5)}
    assert len(seeds) == 100_000


# --- run_dataset -----------------------------------------------------------

def test_run_dataset_counts(tmp_path):
    make_dataset(tmp_path / "in", 10)
    cfg = base_config(tmp_path / "in", tmp_path / "out",
                      augmentations_per_sample=3)
    manifest = run_dataset(cfg)
    assert len(manifest.entries) == 40
    assert not manifest.failures
    tensors = list((tmp_path / "out").rglob("*.etns"))
    assert len(tensors) == 40


def test_run_dataset_k0_is_pure_conversion(tmp_path):
    make_dataset(tmp_path / "in", 4)
    cfg = base_config(tmp_path / "in", tmp_path / "out",
                      augmentations_per_sample=0)
    manifest = run_dataset(cfg)
    assert len(manifest.entries) == 4
    assert all(e.applied is None and e.seed is None for e in manifest.entries)
    audit = (tmp_path / "out" / "audit.ndjson").read_text()
    assert audit == ""


def test_run_dataset_rerun_identical(tmp_path):
    make_dataset(tmp_path / "in", 6)
    run_dataset(base_config(tmp_path / "in", tmp_path / "out1"))
    run_dataset(base_config(tmp_path / "in", tmp_path / "out2"))
    assert tree_digest(tmp_path / "out1") == tree_digest(tmp_path / "out2")


def test_run_dataset_worker_count_invariant(tmp_path):
    make_dataset(tmp_path / "in", 8)
    digests = []
    for workers in (1, 4):
        out = tmp_path / f"out_w{workers}"
        run_dataset(base_config(tmp_path / "in", out, workers=workers))
        digests.append(tree_digest(out))
    assert digests[0] == digests[1]


def test_run_dataset_manifest_replayable(tmp_path):
    from eventdrop.augment import AppliedOpRecord, replay
    from eventdrop.pipeline import load_sample
    from eventdrop.represent import GridConfig, build_voxel_grid, flatten_channels

    make_dataset(tmp_path / "in", 5)
    cfg = base_config(tmp_path / "in", tmp_path / "out")
    run_dataset(cfg)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    for entry in manifest["entries"]:
        if entry["applied"] is None:
            continue
        stream = load_sample(tmp_path / "in" / entry["input_path"], cfg)
        record = AppliedOpRecord.from_json(entry["applied"])
        grid = flatten_channels(
            build_voxel_grid(replay(stream, record), GridConfig(cfg.time_bins)))
        existing = (tmp_path / "out" / entry["output_path"]).read_bytes()
        assert codec.write_tensor(grid, "etns") == existing


def test_run_dataset_fail_soft_accounting(tmp_path):
    make_dataset(tmp_path / "in", 3)
    (tmp_path / "in" / "class_0" / "broken.bin").write_bytes(b"\x00" * 7)
    cfg = base_config(tmp_path / "in", tmp_path / "out",
                      augmentations_per_sample=1)
    manifest = run_dataset(cfg)
    assert len(manifest.entries) + len(manifest.failures) == 4 * 2


def test_run_dataset_strict_raises(tmp_path):
    from eventdrop.errors import EventDropError

    make_dataset(tmp_path / "in", 2)
    (tmp_path / "in" / "broken.bin").write_bytes(b"\x01")
    cfg = base_config(tmp_path / "in", tmp_path / "out", strict=True)
    with pytest.raises(EventDropError):
        run_dataset(cfg)


def test_config_rejects_same_roots(tmp_path):
    with pytest.raises(ConfigError):
        base_config(tmp_path, tmp_path)


def test_config_rejects_unknown_repr(tmp_path):
    with pytest.raises(ConfigError):
        base_config(tmp_path / "a", tmp_path / "b", representation="hots")


# --- preview ---------------------------------------------------------------

def test_preview_all_zero_uniform():
    png = render_preview(TensorGrid(np.zeros((8, 8), np.float32), ("y", "x")))
    from PIL import Image
    import io
    img = np.asarray(Image.open(io.BytesIO(png)))
    assert (img == img.flat[0]).all()


def test_preview_single_event_single_pixel():
    data = np.zeros((8, 8), np.float32)
    data[3, 5] = 4.0
    png = render_preview(TensorGrid(data, ("y", "x")))
    from PIL import Image
    import io
    img = np.asarray(Image.open(io.BytesIO(png)))
    assert img[3, 5] == 255
    assert (img != 0).sum() == 1


def test_preview_polarity_colors():
    data = np.zeros((2, 4, 4), np.float32)
    data[1, 0, 0] = 1.0  # positive -> red
    data[0, 2, 2] = 1.0  # negative -> blue
    png = render_preview(TensorGrid(data, ("polarity", "y", "x")))
    from PIL import Image
    import io
    img = np.asarray(Image.open(io.BytesIO(png)))
    assert tuple(img[0, 0]) == (255, 0, 0)
    assert tuple(img[2, 2]) == (0, 0, 255)
    assert tuple(img[1, 1]) == (255, 255, 255)


def test_preview_deterministic():
    gen = np.random.Generator(np.random.PCG64(31))
    grid = TensorGrid(gen.random((2, 6, 6), dtype=np.float32), ("polarity", "y", "x"))
    assert render_preview(grid) == render_preview(grid)


def test_preview_unsupported_shape():
    with pytest.raises(UnsupportedShape):
        render_preview(TensorGrid(np.zeros((3, 4, 4), np.float32),
                                  ("polarity", "y", "x")))


# --- benchmark -------------------------------------------------------------

def test_benchmark_report_schema():
    report = benchmark(n_events=50_000, workers=1)
    names = {(r["stage"], r["name"]) for r in report["rows"]}
    assert ("decode", "atis_bin") in names
    for op in ("random_drop", "drop_by_time", "drop_by_area"):
        assert ("drop", op) in names
    for rep in ("event_frame", "event_count", "voxel_grid", "est"):
        assert ("build", rep) in names
    for row in report["rows"]:
        assert row["events_per_s_single"] > 0


def test_benchmark_drop_faster_than_est():
    report = benchmark(n_events=500_000, workers=1)
    by_name = {(r["stage"], r["name"]): r["events_per_s_single"]
               for r in report["rows"]}
    assert by_name[("drop", "random_drop")] >= by_name[("build", "est")] * 0.5


# --- CLI -------------------------------------------------------------------

def test_cli_convert_and_inspect(tmp_path):
    make_dataset(tmp_path / "in", 3)
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "convert", "--input", str(tmp_path / "in"), "--output", str(tmp_path / "out"),
        "--format", "atis_bin", "--width", str(W), "--height", str(H),
        "--repr", "event_frame", "--out-format", "npy",
    ])
    assert result.exit_code == 0, result.output
    files = sorted((tmp_path / "out").rglob("*.npy"))
    assert len(files) == 3

    sample = next((tmp_path / "in").rglob("*.bin"))
    result = runner.invoke(cli_main, [
        "inspect", str(sample), "--width", str(W), "--height", str(H)])
    assert result.exit_code == 0
    stats = json.loads(result.output)
    assert stats["count"] == 400


def test_cli_augment_with_policy_and_seed(tmp_path):
    make_dataset(tmp_path / "in", 2)
    runner = CliRunner()
    args = [
        "augment", "--input", str(tmp_path / "in"), "--output", str(tmp_path / "out"),
        "--width", str(W), "--height", str(H), "--repr", "voxel_grid",
        "--bins", "4", "--k", "2", "--seed", "5",
        "--policy", "0.1,0.3,0.3,0.3",
    ]
    result = runner.invoke(cli_main, args)
    assert result.exit_code == 0, result.output
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["settings"]["master_seed"] == 5
    assert manifest["settings"]["policy"]["p_identity"] == 0.1
    assert len(manifest["entries"]) == 6


def test_cli_config_file_with_flag_override(tmp_path):
    make_dataset(tmp_path / "in", 2)
    cfg_file = tmp_path / "run.toml"
    cfg_file.write_text(
        f'input_root = "{tmp_path / "in"}"\n'
        f'output_root = "{tmp_path / "out"}"\n'
        f"width = {W}\nheight = {H}\n"
        'representation = "event_frame"\n'
        "master_seed = 3\n"
    )
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "convert", "--config", str(cfg_file), "--repr", "event_count"])
    assert result.exit_code == 0, result.output
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["settings"]["representation"] == "event_count"  # CLI wins
    assert manifest["settings"]["master_seed"] == 3


def test_cli_env_seed_fallback(tmp_path, monkeypatch):
    make_dataset(tmp_path / "in", 1)
    monkeypatch.setenv("EVENTDROP_SEED", "991")
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "convert", "--input", str(tmp_path / "in"), "--output", str(tmp_path / "out"),
        "--width", str(W), "--height", str(H)])
    assert result.exit_code == 0, result.output
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["settings"]["master_seed"] == 991


def test_cli_config_error_exit_code(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "convert", "--input", str(tmp_path / "missing"),
        "--output", str(tmp_path / "out")])
    assert result.exit_code == 2


def test_cli_sample_failure_exit_code(tmp_path):
    (tmp_path / "in").mkdir()
    (tmp_path / "in" / "bad.bin").write_bytes(b"\x00" * 3)
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "convert", "--input", str(tmp_path / "in"), "--output", str(tmp_path / "out"),
        "--width", str(W), "--height", str(H)])
    assert result.exit_code == 1


def test_cli_preview_command(tmp_path):
    gen = np.random.Generator(np.random.PCG64(33))
    grid = TensorGrid(gen.random((4, 4), dtype=np.float32), ("y", "x"))
    tensor = tmp_path / "grid.etns"
    tensor.write_bytes(codec.write_tensor(grid, "etns"))
    runner = CliRunner()
    result = runner.invoke(cli_main, ["preview", str(tensor)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "grid.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_cli_bench_json():
    runner = CliRunner()
    result = runner.invoke(cli_main, ["bench", "--events", "20000", "--json"])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert len(report["rows"]) == 8
