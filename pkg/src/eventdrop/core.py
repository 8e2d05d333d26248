"""Domain types for asynchronous event streams.

An event is the tuple (x, y, t, p): pixel column, pixel row, timestamp in
integer microseconds, polarity in {-1, +1}.  Streams are stored as four
parallel numpy columns plus the sensor geometry; this keeps validation and
all downstream transforms vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CoordinateOutOfRange, InvalidPolarity, InvalidTimestamp

X_DTYPE = np.uint16
Y_DTYPE = np.uint16
T_DTYPE = np.int64
P_DTYPE = np.int8


@dataclass(frozen=True)
class Event:
    """A single sensor event."""

    x: int
    y: int
    t: int
    p: int


@dataclass(frozen=True)
class SensorGeometry:
    """Pixel array dimensions; valid coordinates are [0, W) x [0, H)."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"geometry must be at least 1x1, got {self.width}x{self.height}")


@dataclass(frozen=True, eq=False)
class EventStream:
    """Validated, time-ordered event sequence.

    Immutable: the column arrays are marked read-only on construction.
    Construct through :func:`validate_stream` or
    :meth:`EventStream.from_columns`; the raw constructor does not check
    invariants.
    """

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray
    geometry: SensorGeometry

    def __post_init__(self):
        for col in (self.x, self.y, self.t, self.p):
            col.flags.writeable = False

    def __len__(self) -> int:
        return self.t.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.p, other.p)
        )

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def event(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def select(self, index: np.ndarray) -> "EventStream":
        """Subsequence by index or boolean mask; order must be preserved by the caller."""
        return EventStream(
            self.x[index].copy(), self.y[index].copy(),
            self.t[index].copy(), self.p[index].copy(),
            self.geometry,
        )

    @classmethod
    def empty(cls, geometry: SensorGeometry) -> "EventStream":
        return cls(
            np.empty(0, X_DTYPE), np.empty(0, Y_DTYPE),
            np.empty(0, T_DTYPE), np.empty(0, P_DTYPE),
            geometry,
        )

    @classmethod
    def from_columns(cls, x, y, t, p, geometry: SensorGeometry) -> "EventStream":
        """Validate four parallel columns and build a stream."""
        return _validate_columns(
            np.asarray(x), np.asarray(y), np.asarray(t), np.asarray(p), geometry
        )


@dataclass(frozen=True)
class StreamStats:
    count: int
    positive_count: int
    negative_count: int
    t_first: int
    t_last: int
    duration: int


def _validate_columns(x, y, t, p, geometry: SensorGeometry) -> EventStream:
    n = len(t)
    if not (len(x) == len(y) == len(p) == n):
        raise ValueError("column lengths differ")
    x = np.asarray(x, np.int64)
    y = np.asarray(y, np.int64)
    t = np.asarray(t, np.int64)
    p = np.asarray(p, np.int64)
    if n:
        bad = (x < 0) | (x >= geometry.width) | (y < 0) | (y >= geometry.height)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise CoordinateOutOfRange(
                f"event {i} at ({int(x[i])},{int(y[i])}) outside "
                f"{geometry.width}x{geometry.height}"
            )
        bad = (p != 1) & (p != -1)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise InvalidPolarity(f"event {i} has polarity {int(p[i])}, expected -1 or +1")
        if (t < 0).any():
            i = int(np.flatnonzero(t < 0)[0])
            raise InvalidTimestamp(f"event {i} has negative timestamp {int(t[i])}")
        if np.any(np.diff(t) < 0):
            order = np.argsort(t, kind="stable")
            x, y, t, p = x[order], y[order], t[order], p[order]
    return EventStream(
        x.astype(X_DTYPE), y.astype(Y_DTYPE), t.astype(T_DTYPE), p.astype(P_DTYPE), geometry
    )


def validate_stream(
    events: Iterable[Event] | Sequence[tuple] | EventStream,
    geometry: SensorGeometry,
) -> EventStream:
    """Validate raw events into an EventStream.

    Accepts Event objects, (x, y, t, p) tuples, or an existing stream.
    Events are stably sorted by timestamp if not already non-decreasing;
    out-of-range coordinates and polarities outside {-1, +1} are rejected.
    Idempotent.
    """
    if isinstance(events, EventStream):
        return _validate_columns(events.x, events.y, events.t, events.p, geometry)
    rows = list(events)
    if not rows:
        return EventStream.empty(geometry)
    if isinstance(rows[0], Event):
        rows = [(e.x, e.y, e.t, e.p) for e in rows]
    arr = np.asarray(rows, np.int64)
    return _validate_columns(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], geometry)


def stream_stats(s: EventStream) -> StreamStats:
    """Count and timing summary; all-zero for an empty stream."""
    n = len(s)
    if n == 0:
        return StreamStats(0, 0, 0, 0, 0, 0)
    pos = int(np.count_nonzero(s.p == 1))
    t_first = int(s.t[0])
    t_last = int(s.t[-1])
    return StreamStats(n, pos, n - pos, t_first, t_last, t_last - t_first)
