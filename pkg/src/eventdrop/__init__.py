"""Event-camera stream augmentation and dense tensor conversion."""

from .augment import (
    AppliedOpRecord,
    AugmentPolicy,
    DropOp,
    apply_policy,
    drop_by_area,
    drop_by_time,
    random_drop,
    replay,
)
from .core import (
    Event,
    EventStream,
    SensorGeometry,
    StreamStats,
    stream_stats,
    validate_stream,
)
from .represent import (
    GridConfig,
    TensorGrid,
    build_est,
    build_event_count,
    build_event_frame,
    build_voxel_grid,
    flatten_channels,
    trilinear_kernel,
)
from .rng import RngState, derive_rng, derive_seed

__version__ = "0.1.0"
