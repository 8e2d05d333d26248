"""Dense tensor representations of an event stream.

Four builders are provided:

* event frame        -- per-pixel event counts, polarity ignored
* event count image  -- per-pixel counts, one channel per polarity
* voxel grid         -- counts binned over C temporal intervals
* est                -- polarity- and time-resolved grid where each event
                        deposits its normalized timestamp weighted by a
                        trilinear kernel

Counting builders accumulate in 64-bit integers and cast to float32 at the
end, so count conservation is exact.  The EST builder accumulates in
float64 and casts at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import EventStream
from .errors import ZeroDuration

AXIS_NAMES = ("polarity", "time_bin", "y", "x", "channel")

# polarity channel order: index 0 = negative, index 1 = positive
NEG_CHANNEL = 0
POS_CHANNEL = 1


@dataclass(frozen=True, eq=False)
class TensorGrid:
    """Dense float32 array with named axes, row-major, last axis fastest."""

    data: np.ndarray
    axes: tuple[str, ...]

    def __post_init__(self):
        if self.data.ndim != len(self.axes):
            raise ValueError(f"{self.data.ndim}-d data with {len(self.axes)} axis names")
        for name in self.axes:
            if name not in AXIS_NAMES:
                raise ValueError(f"unknown axis name {name!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorGrid):
            return NotImplemented
        return self.axes == other.axes and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class GridConfig:
    """Temporal binning configuration.

    time_bins is C; the bin size is derived per stream as
    (t_last - t_first) / C.  est_normalization selects the timestamp
    normalization used by the EST builder: "bin" divides the elapsed time
    by the bin size (values range up to C), "duration" divides by the
    whole stream duration (values in [0, 1]).
    """

    time_bins: int = 9
    est_normalization: Literal["bin", "duration"] = "bin"

    def __post_init__(self):
        if self.time_bins < 1:
            raise ValueError("time_bins must be >= 1")


def build_event_frame(s: EventStream) -> TensorGrid:
    """Per-pixel histogram of event counts, shape (H, W)."""
    h, w = s.geometry.height, s.geometry.width
    flat = s.y.astype(np.int64) * w + s.x.astype(np.int64)
    counts = np.bincount(flat, minlength=h * w).reshape(h, w)
    return TensorGrid(counts.astype(np.float32), ("y", "x"))


def build_event_count(s: EventStream) -> TensorGrid:
    """Per-pixel histograms split by polarity, shape (2, H, W).

    Channel 0 is negative polarity, channel 1 positive; summing the
    channels reproduces the event frame.
    """
    h, w = s.geometry.height, s.geometry.width
    chan = (s.p.astype(np.int64) + 1) // 2  # -1 -> 0, +1 -> 1
    flat = (chan * h + s.y.astype(np.int64)) * w + s.x.astype(np.int64)
    counts = np.bincount(flat, minlength=2 * h * w).reshape(2, h, w)
    return TensorGrid(counts.astype(np.float32), ("polarity", "y", "x"))


def _bin_index(t: np.ndarray, t_first: int, duration: int, c: int) -> np.ndarray:
    # bin n covers (t_first + n*dt, t_first + (n+1)*dt] with dt = duration/c;
    # bin 0 additionally includes its left edge so the stream's first event
    # is counted.  elapsed*c <= (n+1)*duration decides membership exactly in
    # integer arithmetic, so bin edges never suffer float rounding.
    elapsed = t.astype(np.int64) - t_first
    if int(elapsed[-1]) <= (1 << 62) // c:
        idx = (elapsed * c + duration - 1) // duration - 1
    else:
        idx = np.ceil(elapsed.astype(np.float64) * c / duration).astype(np.int64) - 1
    return np.clip(idx, 0, c - 1)


def build_voxel_grid(s: EventStream, cfg: GridConfig) -> TensorGrid:
    """Event counts over C temporal bins, shape (C, H, W).

    A zero-duration stream puts all events in bin 0.
    """
    h, w = s.geometry.height, s.geometry.width
    c = cfg.time_bins
    if len(s) == 0:
        return TensorGrid(np.zeros((c, h, w), np.float32), ("time_bin", "y", "x"))
    t_first, t_last = int(s.t[0]), int(s.t[-1])
    if t_last == t_first:
        idx = np.zeros(len(s), np.int64)
    else:
        idx = _bin_index(s.t, t_first, t_last - t_first, c)
    flat = (idx * h + s.y.astype(np.int64)) * w + s.x.astype(np.int64)
    counts = np.bincount(flat, minlength=c * h * w).reshape(c, h, w)
    return TensorGrid(counts.astype(np.float32), ("time_bin", "y", "x"))


def trilinear_kernel(dx: float, dy: float, dt: float, dt_bin: float) -> float:
    """Kernel weight at pixel offset (dx, dy) and time offset dt.

    Zero unless dx = dy = 0, else max(0, 1 - |dt / dt_bin|).
    """
    if dx != 0 or dy != 0:
        return 0.0
    return max(0.0, 1.0 - abs(dt / dt_bin))


def build_est(s: EventStream, cfg: GridConfig) -> TensorGrid:
    """Event spike tensor with a trilinear temporal kernel, shape (2, C, H, W).

    Each event of polarity +/- deposits its normalized timestamp, weighted
    by the kernel, at its own pixel in every bin whose center lies within
    one bin size of the event.  Requires a non-empty stream of positive
    duration (the bin size appears in a denominator).
    """
    h, w = s.geometry.height, s.geometry.width
    c = cfg.time_bins
    if len(s) == 0:
        raise ZeroDuration("EST needs at least one event")
    t_first, t_last = int(s.t[0]), int(s.t[-1])
    if t_last == t_first:
        raise ZeroDuration("EST undefined for zero-duration streams")
    dt_us = (t_last - t_first) / c

    elapsed = s.t.astype(np.float64) - t_first
    u = elapsed / dt_us  # event time in bin-size units
    if cfg.est_normalization == "bin":
        f = u
    else:
        f = elapsed / (t_last - t_first)

    grid = np.zeros((2, c, h, w), np.float64)
    chan = (s.p.astype(np.int64) + 1) // 2
    pix = s.y.astype(np.int64) * w + s.x.astype(np.int64)
    flat = grid.reshape(2, c, h * w)
    # bin centers sit at u = n + 1; only bins floor(u)-1 and floor(u)
    # receive nonzero kernel weight
    base = np.floor(u).astype(np.int64) - 1
    for off in (0, 1):
        n = base + off
        weight = 1.0 - np.abs((n + 1) - u)
        ok = (n >= 0) & (n < c) & (weight > 0)
        np.add.at(flat, (chan[ok], n[ok], pix[ok]), f[ok] * weight[ok])
    return TensorGrid(grid.astype(np.float32), ("polarity", "time_bin", "y", "x"))


def bin_centers(t_first: int, t_last: int, c: int) -> np.ndarray:
    """Timestamps t_n of the C bin right-edges / kernel centers."""
    dt_us = (t_last - t_first) / c
    return t_first + (np.arange(c, dtype=np.float64) + 1.0) * dt_us


def flatten_channels(grid: TensorGrid) -> TensorGrid:
    """Merge leading polarity/time axes into one channel axis, (channel, H, W).

    Polarity-major ordering; an event frame gains a singleton channel axis.
    Values are unchanged.
    """
    if grid.axes[-2:] != ("y", "x"):
        raise ValueError(f"trailing axes must be (y, x), got {grid.axes}")
    h, w = grid.shape[-2:]
    n_chan = math.prod(grid.shape[:-2]) if grid.data.ndim > 2 else 1
    return TensorGrid(grid.data.reshape(n_chan, h, w), ("channel", "y", "x"))
