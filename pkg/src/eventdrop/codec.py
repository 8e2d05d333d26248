"""Bit-exact readers and writers for event files and tensor containers.

Supported formats:

* ATIS ``.bin`` -- 5-byte packed records, big-endian within the record:
  byte0 = x, byte1 = y, byte2 bit7 = polarity, byte2 bits6..0 = t[22:16],
  byte3 = t[15:8], byte4 = t[7:0].  Timestamps are microseconds and must
  fit in 23 bits.  Polarity bit 1 decodes to +1, bit 0 to -1.
* CSV -- header ``x,y,t,p``; the p column accepts {-1, 1} or {0, 1} with
  0 mapped to -1.  Written files use {-1, 1}.
* ETNS -- native tensor container: magic ``ETNS``, version byte, then a
  little-endian header (dtype tag, axis count, per-axis name tag and
  length), then the row-major float32 payload.
* NPY -- the standard NPY v1.0 container with descr ``<f4``.

All readers decode arbitrary bytes into either a value or a typed error;
they never crash.  All writers are deterministic: identical input yields
identical bytes.
"""

from __future__ import annotations

import io
import math
import struct

import numpy as np

from .core import EventStream, SensorGeometry, validate_stream
from .errors import FieldOverflow, ParseError, TruncatedFile, UnsupportedDtype
from .represent import AXIS_NAMES, TensorGrid

ATIS_RECORD_SIZE = 5
ATIS_T_MAX = 1 << 23

ETNS_MAGIC = b"ETNS"
ETNS_VERSION = 1
_ETNS_DTYPE_F32 = 0
_AXIS_TAG = {name: i for i, name in enumerate(AXIS_NAMES)}


def read_atis_bin(data: bytes, geometry: SensorGeometry) -> EventStream:
    """Decode 5-byte ATIS records into a validated stream."""
    if len(data) % ATIS_RECORD_SIZE != 0:
        raise TruncatedFile(
            f"{len(data)} bytes is not a multiple of {ATIS_RECORD_SIZE}"
        )
    raw = np.frombuffer(data, np.uint8).reshape(-1, ATIS_RECORD_SIZE).astype(np.int64)
    x = raw[:, 0]
    y = raw[:, 1]
    p = np.where(raw[:, 2] >> 7 == 1, 1, -1)
    t = ((raw[:, 2] & 0x7F) << 16) | (raw[:, 3] << 8) | raw[:, 4]
    return validate_stream(EventStream.from_columns(x, y, t, p, geometry), geometry)


def write_atis_bin(s: EventStream) -> bytes:
    """Pack a stream into 5-byte ATIS records; exact inverse of read_atis_bin."""
    x = s.x.astype(np.int64)
    y = s.y.astype(np.int64)
    t = s.t.astype(np.int64)
    if len(s):
        if int(t.max()) >= ATIS_T_MAX:
            raise FieldOverflow(f"timestamp {int(t.max())} needs more than 23 bits")
        if int(x.max()) > 0xFF:
            raise FieldOverflow(f"x {int(x.max())} does not fit one byte")
        if int(y.max()) > 0xFF:
            raise FieldOverflow(f"y {int(y.max())} does not fit one byte")
    out = np.empty((len(s), ATIS_RECORD_SIZE), np.uint8)
    out[:, 0] = x
    out[:, 1] = y
    out[:, 2] = ((s.p == 1).astype(np.int64) << 7) | (t >> 16)
    out[:, 3] = (t >> 8) & 0xFF
    out[:, 4] = t & 0xFF
    return out.tobytes()


def read_csv(text: str, geometry: SensorGeometry) -> EventStream:
    """Parse the ``x,y,t,p`` interchange format."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != "x,y,t,p":
        raise ParseError("expected header 'x,y,t,p'", 1)
    xs, ys, ts, ps = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", lineno)
        try:
            x, y, t, p = (int(v) for v in parts)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if p == 0:
            p = -1
        xs.append(x)
        ys.append(y)
        ts.append(t)
        ps.append(p)
    return EventStream.from_columns(
        np.asarray(xs, np.int64), np.asarray(ys, np.int64),
        np.asarray(ts, np.int64), np.asarray(ps, np.int64), geometry,
    )


def write_csv(s: EventStream) -> str:
    lines = ["x,y,t,p"]
    lines.extend(
        f"{int(x)},{int(y)},{int(t)},{int(p)}"
        for x, y, t, p in zip(s.x, s.y, s.t, s.p)
    )
    return "\n".join(lines) + "\n"


def write_tensor(grid: TensorGrid, format: str = "etns") -> bytes:
    """Serialize a grid to the native ETNS container or NPY v1.0."""
    data = np.ascontiguousarray(grid.data)
    if data.dtype != np.float32:
        raise UnsupportedDtype(f"only float32 grids are written, got {data.dtype}")
    if any(n < 1 for n in data.shape):
        raise ValueError(f"degenerate grid shape {data.shape}")
    if format == "npy":
        buf = io.BytesIO()
        np.lib.format.write_array(buf, data.astype("<f4"), version=(1, 0))
        return buf.getvalue()
    if format != "etns":
        raise ValueError(f"unknown tensor format {format!r}")
    parts = [ETNS_MAGIC, bytes([ETNS_VERSION, _ETNS_DTYPE_F32, data.ndim])]
    for name, length in zip(grid.axes, data.shape):
        parts.append(struct.pack("<BI", _AXIS_TAG[name], length))
    parts.append(data.astype("<f4").tobytes())
    return b"".join(parts)


def read_tensor(data: bytes) -> TensorGrid:
    """Inverse of write_tensor; detects the container by magic."""
    if data[:6] == b"\x93NUMPY":
        try:
            arr = np.load(io.BytesIO(data))
        except Exception as exc:
            raise TruncatedFile(f"bad NPY container: {exc}") from None
        if arr.dtype != np.float32:
            raise UnsupportedDtype(f"expected float32 payload, got {arr.dtype}")
        # NPY carries no axis names; infer from rank (channel-first layouts)
        names = {2: ("y", "x"), 3: ("channel", "y", "x"),
                 4: ("polarity", "time_bin", "y", "x")}
        if arr.ndim not in names:
            raise TruncatedFile(f"unsupported NPY rank {arr.ndim}")
        return TensorGrid(np.ascontiguousarray(arr), names[arr.ndim])
    if data[:4] != ETNS_MAGIC:
        raise TruncatedFile("unrecognized tensor container magic")
    try:
        version, dtype_tag, ndim = data[4], data[5], data[6]
    except IndexError:
        raise TruncatedFile("header ends inside fixed fields") from None
    if version != ETNS_VERSION:
        raise TruncatedFile(f"unsupported ETNS version {version}")
    if dtype_tag != _ETNS_DTYPE_F32:
        raise UnsupportedDtype(f"unknown dtype tag {dtype_tag}")
    off = 7
    axes, shape = [], []
    for _ in range(ndim):
        if off + 5 > len(data):
            raise TruncatedFile("header ends inside axis table")
        tag, length = struct.unpack_from("<BI", data, off)
        off += 5
        if tag >= len(AXIS_NAMES):
            raise TruncatedFile(f"unknown axis tag {tag}")
        axes.append(AXIS_NAMES[tag])
        shape.append(length)
    count = math.prod(shape) if shape else 0
    if len(data) - off != count * 4:
        raise TruncatedFile(
            f"payload is {len(data) - off} bytes, header promises {count * 4}"
        )
    arr = np.frombuffer(data, "<f4", count=count, offset=off).reshape(shape)
    return TensorGrid(arr.astype(np.float32), tuple(axes))
