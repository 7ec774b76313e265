"""Event streams: parsing, serialization and constant-event-count windowing.

Two on-disk formats are supported.

``evt-csv``
    ASCII, LF-terminated, one event per line as ``t_us,x,y,polarity``.
    An optional first line ``t_us,x,y,polarity`` and ``#`` comment lines are
    skipped. Geometry is not stored and must be supplied by the caller.

``evt-bin``
    16-byte header (magic ``EVTB``, u16 version, u16 width, u16 height,
    6 reserved bytes) followed by 16-byte little-endian records
    (u64 t, u16 x, u16 y, i8 polarity, 3 pad bytes).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

CSV_HEADER = "t_us,x,y,polarity"
BIN_MAGIC = b"EVTB"
BIN_VERSION = 1
BIN_HEADER = struct.Struct("<4sHHH6x")
RECORD_DTYPE = np.dtype(
    {
        "names": ["t", "x", "y", "p"],
        "formats": ["<u8", "<u2", "<u2", "i1"],
        "offsets": [0, 8, 10, 12],
        "itemsize": 16,
    }
)
FORMATS = ("evt-csv", "evt-bin")


class ParseError(ValueError):
    """Malformed input. ``offset`` is a byte offset, ``line`` a 1-based line number (csv only)."""

    def __init__(self, message: str, offset: int, line: Optional[int] = None):
        where = f"line {line}, byte {offset}" if line is not None else f"byte {offset}"
        super().__init__(f"{message} (at {where})")
        self.offset = offset
        self.line = line


class ValidationError(ValueError):
    """Well-formed input violating a stream invariant. ``record`` is 1-based."""

    def __init__(self, message: str, record: int):
        super().__init__(f"{message} (record {record})")
        self.record = record


@dataclass
class StreamMeta:
    """Recording annotations carried alongside the events (not serialized)."""

    object_id: Optional[int] = None
    omega: Optional[float] = None  # rad/s
    distance_scale: Optional[float] = None
    angle_offset_deg: float = 0.0

    def angle_at(self, t_us):
        """Platform angle in degrees at timestamp(s) ``t_us``."""
        if self.omega is None:
            raise ValueError("stream has no angular velocity annotation")
        return self.angle_offset_deg + np.degrees(self.omega) * np.asarray(t_us, dtype=np.float64) * 1e-6


@dataclass(eq=False)
class EventStream:
    width: int
    height: int
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    meta: StreamMeta = field(default_factory=StreamMeta)
    n_rejected: int = 0

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.x = np.asarray(self.x, dtype=np.int32)
        self.y = np.asarray(self.y, dtype=np.int32)
        self.p = np.asarray(self.p, dtype=np.int8)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event field arrays differ in length")

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other) -> bool:
        # Geometry and events only; annotations are not part of the wire formats.
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    @classmethod
    def empty(cls, width: int, height: int) -> "EventStream":
        z = np.zeros(0)
        return cls(width, height, z, z, z, z)

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad sensor geometry {self.width}x{self.height}")
        if len(self) == 0:
            return
        if self.t.min() < 0:
            raise ValidationError("negative timestamp", int(np.argmax(self.t < 0)) + 1)
        bad = np.flatnonzero(np.diff(self.t) < 0)
        if bad.size:
            raise ValidationError("non-monotonic timestamp", int(bad[0]) + 2)
        oob = (self.x < 0) | (self.x >= self.width) | (self.y < 0) | (self.y >= self.height)
        if oob.any():
            raise ValidationError("event outside sensor geometry", int(np.argmax(oob)) + 1)
        badp = (self.p != 1) & (self.p != -1)
        if badp.any():
            raise ValidationError("polarity must be +1 or -1", int(np.argmax(badp)) + 1)


@dataclass(eq=False)
class EventWindow:
    """A constant-count slice of a stream. Field arrays are views into the stream."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    window_index: int
    start: int  # index of the first event in the parent stream

    def __len__(self) -> int:
        return len(self.t)

    @property
    def start_t(self) -> int:
        return int(self.t[0])

    @property
    def end_t(self) -> int:
        return int(self.t[-1])

    @property
    def mid_t(self) -> float:
        return 0.5 * (self.start_t + self.end_t)


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValueError(f"unknown event format {fmt!r}; expected one of {FORMATS}")


def _drop_out_of_bounds(width, height, t, x, y, p, meta) -> EventStream:
    keep = (x >= 0) & (x < width) & (y >= 0) & (y < height)
    n_bad = int(len(keep) - keep.sum())
    s = EventStream(width, height, t[keep], x[keep], y[keep], p[keep], meta or StreamMeta(), n_bad)
    return s


def _parse_csv(data: bytes, width: int, height: int, meta) -> EventStream:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as e:
        raise ParseError("non-ASCII byte", e.start) from None
    rows = []
    offset = 0
    for lineno, line in enumerate(text.split("\n"), start=1):
        line_offset = offset
        offset += len(line) + 1
        s = line.strip()
        if not s or s.startswith("#") or (lineno == 1 and s == CSV_HEADER):
            continue
        parts = s.split(",")
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", line_offset, lineno)
        try:
            t, x, y, p = (int(v) for v in parts)
        except ValueError:
            raise ParseError(f"non-integer field in {s!r}", line_offset, lineno) from None
        if t < 0:
            raise ParseError("negative timestamp", line_offset, lineno)
        if p not in (1, -1):
            raise ParseError(f"polarity must be +1 or -1, got {p}", line_offset, lineno)
        if rows and t < rows[-1][0]:
            raise ValidationError("non-monotonic timestamp", len(rows) + 1)
        rows.append((t, x, y, p))
    arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return _drop_out_of_bounds(width, height, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], meta)


def _parse_bin(data: bytes, meta) -> EventStream:
    if len(data) < BIN_HEADER.size:
        raise ParseError("truncated header", len(data))
    magic, version, width, height = BIN_HEADER.unpack_from(data)
    if magic != BIN_MAGIC:
        raise ParseError(f"bad magic {magic!r}", 0)
    if version != BIN_VERSION:
        raise ParseError(f"unsupported version {version}", 4)
    body = len(data) - BIN_HEADER.size
    if body % RECORD_DTYPE.itemsize:
        n_full = body // RECORD_DTYPE.itemsize
        raise ParseError("truncated record", BIN_HEADER.size + n_full * RECORD_DTYPE.itemsize)
    rec = np.frombuffer(data, dtype=RECORD_DTYPE, offset=BIN_HEADER.size)
    if rec["t"].size and rec["t"].max() > np.iinfo(np.int64).max:
        i = int(np.argmax(rec["t"] > np.iinfo(np.int64).max))
        raise ParseError("timestamp overflow", BIN_HEADER.size + i * 16)
    badp = (rec["p"] != 1) & (rec["p"] != -1)
    if badp.any():
        i = int(np.argmax(badp))
        raise ParseError(f"polarity must be +1 or -1, got {rec['p'][i]}", BIN_HEADER.size + i * 16 + 12)
    t = rec["t"].astype(np.int64)
    bad = np.flatnonzero(np.diff(t) < 0)
    if bad.size:
        raise ValidationError("non-monotonic timestamp", int(bad[0]) + 2)
    return _drop_out_of_bounds(
        width, height, t, rec["x"].astype(np.int32), rec["y"].astype(np.int32), rec["p"], meta
    )


def parse_event_stream(
    source: bytes,
    fmt: str,
    width: Optional[int] = None,
    height: Optional[int] = None,
    meta: Optional[StreamMeta] = None,
) -> EventStream:
    """Parse ``source`` into a validated :class:`EventStream`.

    Out-of-bounds events are dropped; their count is kept in ``n_rejected``.
    For ``evt-bin`` the geometry comes from the header and ``width``/``height``
    are only cross-checked when given.

    Raises
    ------
    ParseError
        Malformed record, with byte offset (and line number for csv).
    ValidationError
        Timestamps decrease; reports the first offending record.
    """
    _check_format(fmt)
    if not source:
        raise ValueError("empty source")
    if fmt == "evt-csv":
        if width is None or height is None:
            raise ValueError("evt-csv needs sensor geometry (width, height)")
        return _parse_csv(bytes(source), width, height, meta)
    stream = _parse_bin(bytes(source), meta)
    if width is not None and height is not None and (width, height) != (stream.width, stream.height):
        raise ValueError(
            f"geometry mismatch: header {stream.width}x{stream.height}, expected {width}x{height}"
        )
    return stream


def serialize_event_stream(stream: EventStream, fmt: str) -> bytes:
    _check_format(fmt)
    stream.validate()
    if fmt == "evt-csv":
        lines = [CSV_HEADER]
        lines.extend(
            f"{t},{x},{y},{p}"
            for t, x, y, p in zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist())
        )
        return ("\n".join(lines) + "\n").encode("ascii")
    rec = np.zeros(len(stream), dtype=RECORD_DTYPE)
    rec["t"] = stream.t
    rec["x"] = stream.x
    rec["y"] = stream.y
    rec["p"] = stream.p
    return BIN_HEADER.pack(BIN_MAGIC, BIN_VERSION, stream.width, stream.height) + rec.tobytes()


def read_event_file(path, fmt=None, width=None, height=None, meta=None) -> EventStream:
    path = str(path)
    if fmt is None:
        fmt = "evt-csv" if path.endswith(".csv") else "evt-bin"
    with open(path, "rb") as fh:
        return parse_event_stream(fh.read(), fmt, width, height, meta)


def write_event_file(path, stream: EventStream, fmt=None) -> None:
    path = str(path)
    if fmt is None:
        fmt = "evt-csv" if path.endswith(".csv") else "evt-bin"
    with open(path, "wb") as fh:
        fh.write(serialize_event_stream(stream, fmt))


def iter_windows(stream: EventStream, count: int, stride: Optional[int] = None) -> Iterator[EventWindow]:
    if count < 1:
        raise ValueError("count must be >= 1")
    stride = count if stride is None else stride
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n = len(stream)
    for i, start in enumerate(range(0, n - count + 1, stride)):
        sl = slice(start, start + count)
        yield EventWindow(stream.t[sl], stream.x[sl], stream.y[sl], stream.p[sl], i, start)


def window_by_count(stream: EventStream, count: int, stride: Optional[int] = None) -> list:
    """Split ``stream`` into windows of exactly ``count`` events.

    Window ``i`` holds events ``[i*stride, i*stride + count)``; the trailing
    partial window is dropped. ``stride`` defaults to ``count``.
    """
    return list(iter_windows(stream, count, stride))


def num_windows(n_events: int, count: int, stride: Optional[int] = None) -> int:
    stride = count if stride is None else stride
    if n_events < count:
        return 0
    return (n_events - count) // stride + 1
