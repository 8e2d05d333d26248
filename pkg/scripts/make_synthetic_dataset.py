#!/usr/bin/env python3
"""Generate a synthetic ATIS .bin dataset tree for pipeline experiments.

Samples are random moving-blob streams grouped into class directories, so
the output mimics the directory-per-label layout of converted
neuromorphic recognition datasets.
"""

import argparse
from pathlib import Path

import numpy as np

from eventdrop import codec
from eventdrop.core import EventStream, SensorGeometry


def blob_stream(gen, geometry, n_events, duration_us):
    """Events clustered around a pixel blob drifting across the sensor."""
    t = np.sort(gen.integers(0, duration_us, n_events))
    phase = t / duration_us
    cx = (0.2 + 0.6 * phase) * geometry.width
    cy = (0.5 + 0.3 * np.sin(2 * np.pi * phase)) * geometry.height
    x = np.clip(cx + gen.normal(0, geometry.width * 0.05, n_events),
                0, geometry.width - 1).astype(np.int64)
    y = np.clip(cy + gen.normal(0, geometry.height * 0.05, n_events),
                0, geometry.height - 1).astype(np.int64)
    p = gen.choice(np.array([-1, 1]), n_events)
    return EventStream.from_columns(x, y, t, p, geometry)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("output", type=Path)
    ap.add_argument("--classes", type=int, default=4)
    ap.add_argument("--samples-per-class", type=int, default=10)
    ap.add_argument("--events", type=int, default=5_000)
    ap.add_argument("--width", type=int, default=240)
    ap.add_argument("--height", type=int, default=180)
    ap.add_argument("--duration-us", type=int, default=300_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    geometry = SensorGeometry(args.width, args.height)
    gen = np.random.Generator(np.random.PCG64(args.seed))
    for c in range(args.classes):
        class_dir = args.output / f"class_{c:02d}"
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(args.samples_per_class):
            s = blob_stream(gen, geometry, args.events, args.duration_us)
            (class_dir / f"sample_{i:04d}.bin").write_bytes(codec.write_atis_bin(s))
    total = args.classes * args.samples_per_class
    print(f"wrote {total} samples under {args.output}")


if __name__ == "__main__":
    main()
