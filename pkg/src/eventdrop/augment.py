"""Event stream augmentation by dropping events.

One of four operations is applied per sample: identity, random drop,
drop-by-time, or drop-by-area.  Magnitudes are discrete: random drop and
drop-by-time use the nine levels {0.1, ..., 0.9}, drop-by-area the five
levels {0.05, ..., 0.25}.  Every operation returns a subsequence of its
input; geometry is never changed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import EventStream
from .rng import RngState

RATIO_LEVELS_DROP = tuple(i / 10 for i in range(1, 10))
RATIO_LEVELS_AREA = tuple(i / 20 for i in range(1, 6))


class DropOp(enum.Enum):
    IDENTITY = "identity"
    RANDOM_DROP = "random_drop"
    DROP_BY_TIME = "drop_by_time"
    DROP_BY_AREA = "drop_by_area"


@dataclass(frozen=True)
class AugmentPolicy:
    """Selection probability per operation; defaults are uniform."""

    p_identity: float = 0.25
    p_random_drop: float = 0.25
    p_drop_by_time: float = 0.25
    p_drop_by_area: float = 0.25
    # drop-by-time window clipping: True caps the window at the last
    # timestamp, False reproduces the literal T_max = max(t_I, ...) rule
    # which always extends the window to the end of the stream
    clip_time_window: bool = True

    def __post_init__(self):
        probs = self.probabilities
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be non-negative")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(probs)}, expected 1")

    @property
    def probabilities(self) -> tuple[float, float, float, float]:
        return (self.p_identity, self.p_random_drop,
                self.p_drop_by_time, self.p_drop_by_area)


_POLICY_ORDER = (DropOp.IDENTITY, DropOp.RANDOM_DROP,
                 DropOp.DROP_BY_TIME, DropOp.DROP_BY_AREA)


@dataclass(frozen=True)
class AppliedOpRecord:
    """What one policy application drew, sufficient to replay it."""

    op: DropOp
    ratio: Optional[float] = None
    t_window: Optional[tuple[float, float]] = None
    region: Optional[tuple[int, int]] = None
    seed: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "op": self.op.value,
            "ratio": self.ratio,
            "t_window": list(self.t_window) if self.t_window else None,
            "region": list(self.region) if self.region else None,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AppliedOpRecord":
        return cls(
            op=DropOp(obj["op"]),
            ratio=obj.get("ratio"),
            t_window=tuple(obj["t_window"]) if obj.get("t_window") else None,
            region=tuple(obj["region"]) if obj.get("region") else None,
            seed=obj.get("seed"),
        )


def random_drop(s: EventStream, ratio: float, rng: RngState) -> EventStream:
    """Drop a uniformly random subset so exactly floor(I*(1-ratio)) remain.

    Sampling is without replacement; temporal order is preserved.
    """
    n = len(s)
    # exact rational floor: 10 * (1 - 0.9) rounds to 0.999... in floats and
    # would floor to 0 instead of 1
    keep = math.floor(n * (1 - Fraction(ratio).limit_denominator(10_000)))
    if keep == n:
        return s
    idx = rng.generator.choice(n, size=keep, replace=False)
    idx.sort()
    return s.select(idx)


def drop_time_window(s: EventStream, t_min: float, t_max: float) -> EventStream:
    """Keep events strictly outside the closed window [t_min, t_max]."""
    t = s.t.astype(np.float64)
    return s.select((t < t_min) | (t > t_max))


def drop_by_time(s: EventStream, ratio: float, rng: RngState,
                 clip_window: bool = True) -> EventStream:
    """Drop all events inside a random time window of extent ratio*duration.

    The window start is uniform over [t_first, t_last].  With clip_window
    the window end is capped at t_last; without it the literal rule
    max(t_last, start + ratio*duration) is used, which always runs to the
    end of the stream.
    """
    stream, _ = _drop_by_time_draw(s, ratio, rng, clip_window)
    return stream


def _drop_by_time_draw(s, ratio, rng, clip_window):
    if len(s) == 0:
        return s, None
    t_first, t_last = float(s.t[0]), float(s.t[-1])
    if t_first == t_last:
        return s, None
    t_min = rng.generator.uniform(t_first, t_last)
    t_max = t_min + ratio * (t_last - t_first)
    t_max = min(t_last, t_max) if clip_window else max(t_last, t_max)
    return drop_time_window(s, t_min, t_max), (t_min, t_max)


def drop_region(s: EventStream, x0: int, y0: int, ratio: float) -> EventStream:
    """Drop events with x in [x0, x0 + ratio*W] and y in [y0, y0 + ratio*H].

    Bounds are closed; the region is implicitly clipped at the sensor edge.
    """
    w, h = s.geometry.width, s.geometry.height
    x = s.x.astype(np.float64)
    y = s.y.astype(np.float64)
    inside = (x >= x0) & (x <= x0 + ratio * w) & (y >= y0) & (y <= y0 + ratio * h)
    return s.select(~inside)


def drop_by_area(s: EventStream, ratio: float, rng: RngState) -> EventStream:
    """Drop events inside a random rectangle covering a ratio of each axis."""
    stream, _ = _drop_by_area_draw(s, ratio, rng)
    return stream


def _drop_by_area_draw(s, ratio, rng):
    w, h = s.geometry.width, s.geometry.height
    x0 = int(rng.generator.integers(0, w))
    y0 = int(rng.generator.integers(0, h))
    return drop_region(s, x0, y0, ratio), (x0, y0)


def apply_policy(s: EventStream, policy: AugmentPolicy,
                 rng: RngState) -> tuple[EventStream, AppliedOpRecord]:
    """Apply one randomly selected drop operation.

    Draw order: operation, then magnitude level, then the operation's own
    randomness.  Identity consumes only the operation draw.  The returned
    record holds everything needed to replay the exact same output.
    """
    gen = rng.generator
    op = _POLICY_ORDER[int(gen.choice(4, p=policy.probabilities))]
    if op is DropOp.IDENTITY:
        return s, AppliedOpRecord(op=op, seed=rng.seed)
    if op is DropOp.RANDOM_DROP:
        ratio = int(gen.integers(1, 10)) / 10
        return random_drop(s, ratio, rng), AppliedOpRecord(
            op=op, ratio=ratio, seed=rng.seed)
    if op is DropOp.DROP_BY_TIME:
        ratio = int(gen.integers(1, 10)) / 10
        out, window = _drop_by_time_draw(s, ratio, rng, policy.clip_time_window)
        return out, AppliedOpRecord(op=op, ratio=ratio, t_window=window, seed=rng.seed)
    ratio = int(gen.integers(1, 6)) / 20
    out, region = _drop_by_area_draw(s, ratio, rng)
    return out, AppliedOpRecord(op=op, ratio=ratio, region=region, seed=rng.seed)


def replay(s: EventStream, record: AppliedOpRecord) -> EventStream:
    """Re-create the output of apply_policy from its record."""
    if record.op is DropOp.IDENTITY:
        return s
    if record.op is DropOp.RANDOM_DROP:
        # index choice is not stored; re-run with the recorded seed
        rng = RngState.from_seed(record.seed)
        rng.generator.choice(4, p=(1.0, 0.0, 0.0, 0.0))  # burn the op draw
        rng.generator.integers(1, 10)  # burn the level draw
        return random_drop(s, record.ratio, rng)
    if record.op is DropOp.DROP_BY_TIME:
        if record.t_window is None:
            return s
        return drop_time_window(s, *record.t_window)
    return drop_region(s, record.region[0], record.region[1], record.ratio)
