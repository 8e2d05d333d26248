"""Columnar bindings for ML training loops.

Exposes the augmentation policy and the four tensor builders over a
structure-of-arrays view (x, y, t, p as parallel buffers), so array
frameworks can call into the core library without per-event objects.
Results are bit-for-bit identical to the batch CLI for the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eventdrop import __version__ as _core_version
from eventdrop.augment import AppliedOpRecord, AugmentPolicy, apply_policy
from eventdrop.core import EventStream, SensorGeometry
from eventdrop.represent import (
    GridConfig,
    build_est,
    build_event_count,
    build_event_frame,
    build_voxel_grid,
    flatten_channels,
)
from eventdrop.rng import RngState
from eventdrop.rng import derive_seed as derive_seed  # re-exported helper

__version__ = "0.1.0"
core_version = _core_version

_BUILDERS = {
    "event_frame": lambda s, cfg: build_event_frame(s),
    "event_count": lambda s, cfg: build_event_count(s),
    "voxel_grid": build_voxel_grid,
    "est": build_est,
}

X_DTYPE = np.dtype("<u2")
Y_DTYPE = np.dtype("<u2")
T_DTYPE = np.dtype("<u8")
P_DTYPE = np.dtype("<i1")


@dataclass(frozen=True)
class EventArrayView:
    """Four parallel columns plus sensor geometry.

    Column dtypes are fixed (x, y: uint16; t: uint64; p: int8); anything
    else is converted once on construction.
    """

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "x", np.ascontiguousarray(self.x, X_DTYPE))
        object.__setattr__(self, "y", np.ascontiguousarray(self.y, Y_DTYPE))
        object.__setattr__(self, "t", np.ascontiguousarray(self.t, T_DTYPE))
        object.__setattr__(self, "p", np.ascontiguousarray(self.p, P_DTYPE))
        if not (len(self.x) == len(self.y) == len(self.t) == len(self.p)):
            raise ValueError("column lengths differ")

    def __len__(self) -> int:
        return len(self.t)


def _to_stream(view: EventArrayView) -> EventStream:
    return EventStream.from_columns(
        view.x, view.y, view.t.astype(np.int64), view.p,
        SensorGeometry(view.width, view.height))


def _to_view(s: EventStream) -> EventArrayView:
    return EventArrayView(s.x, s.y, s.t, s.p,
                          s.geometry.width, s.geometry.height)


def augment_events(
    view: EventArrayView,
    policy: AugmentPolicy | None = None,
    seed: int = 0,
) -> tuple[EventArrayView, AppliedOpRecord]:
    """Apply one randomly selected drop operation; same draws as the CLI.

    Validation errors from the core library propagate unchanged.
    """
    stream = _to_stream(view)
    out, record = apply_policy(stream, policy or AugmentPolicy(),
                               RngState.from_seed(seed))
    return _to_view(out), record


def build_representation(
    view: EventArrayView, repr_name: str, time_bins: int = 9
) -> np.ndarray:
    """Channels-first float32 array, identical to the CLI's tensor payload."""
    try:
        builder = _BUILDERS[repr_name]
    except KeyError:
        raise ValueError(
            f"unknown representation {repr_name!r}; "
            f"expected one of {sorted(_BUILDERS)}") from None
    grid = builder(_to_stream(view), GridConfig(time_bins=time_bins))
    return flatten_channels(grid).data
