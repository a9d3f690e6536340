"""Bit-exact reading and writing of time-tagged click records.

Binary layout ("TTG2", little-endian, no padding):

    header  magic[4] | version u32 | resolution u64 (ps per tick) | channel_count u32
    record  timestamp u64 (ticks) | channel u8

CSV layout: a ``timestamp_ps,channel`` header line, then one record per line.
"""

import csv
import io
import logging
import math
import struct
from collections.abc import Iterable, Mapping, Sequence
from typing import BinaryIO, Literal

import numpy as np
import numpy.typing as npt

from hbtsim.core.errors import (
    BadMagicError,
    ChannelOverflowError,
    ConfigurationError,
    CsvFieldError,
    TimestampOverflowError,
    TimestampRegressionError,
    TimeTagFormatError,
    TruncatedRecordError,
    UnsupportedVersionError,
)
from hbtsim.core.models import ClickSeries, TimeTagHeader, TimeTagRecord, WindowGrid, WindowWeights

logger = logging.getLogger(__name__)

MAGIC = b"TTG2"
VERSION = 1
HEADER_STRUCT = struct.Struct("<4sIQI")
HEADER_SIZE = HEADER_STRUCT.size  # 20
RECORD_DTYPE = np.dtype([("timestamp", "<u8"), ("channel", "u1")])
RECORD_SIZE = RECORD_DTYPE.itemsize  # 9
CSV_HEADER = ("timestamp_ps", "channel")
MAX_CHANNELS = 256

OverflowPolicy = Literal["error", "discard"]


def as_record_array(records: Iterable[TimeTagRecord] | npt.NDArray) -> npt.NDArray:
    """Convert records (tuples or a structured array) to the packed record dtype."""
    if isinstance(records, np.ndarray) and records.dtype == RECORD_DTYPE:
        return records
    rows = [(int(ts), int(ch)) for ts, ch in records]
    for index, (ts, ch) in enumerate(rows):
        if ts < 0 or ts >= 2**64:
            raise ValueError(f"record {index}: timestamp {ts} is not an unsigned 64-bit value")
        if not 0 <= ch < MAX_CHANNELS:
            raise ChannelOverflowError(f"record {index}: channel {ch} is not an unsigned byte")
    return np.array(rows, dtype=RECORD_DTYPE)


def to_records(records: npt.NDArray) -> list[TimeTagRecord]:
    """Structured record array as a list of TimeTagRecord tuples."""
    return [
        TimeTagRecord(int(ts), int(ch))
        for ts, ch in zip(records["timestamp"].tolist(), records["channel"].tolist())
    ]


def _check_records(records: npt.NDArray, channel_count: int) -> None:
    if records.size == 0:
        return
    stamps = records["timestamp"]
    regress = np.flatnonzero(stamps[1:] < stamps[:-1])
    if regress.size:
        index = int(regress[0]) + 1
        raise TimestampRegressionError(f"record {index} is earlier than record {index - 1}")
    over = np.flatnonzero(records["channel"] >= channel_count)
    if over.size:
        index = int(over[0])
        raise ChannelOverflowError(
            f"record {index}: channel {int(records['channel'][index])} >= channel_count {channel_count}"
        )


def encode_binary(records: Iterable[TimeTagRecord] | npt.NDArray, header: TimeTagHeader) -> bytes:
    """
    Encode a header and sorted records to TTG2 bytes.

    Raises:
        TimestampRegressionError: If records are not sorted by timestamp
        ChannelOverflowError: If a channel is not below header.channel_count
    """
    array = as_record_array(records)
    _check_records(array, header.channel_count)
    head = HEADER_STRUCT.pack(header.magic, header.version, header.resolution, header.channel_count)
    return head + array.tobytes()


def write_binary(
    records: Iterable[TimeTagRecord] | npt.NDArray, header: TimeTagHeader, sink: BinaryIO
) -> int:
    """
    Write records as a TTG2 stream.

    Args:
        records: Records sorted by timestamp
        header: File header
        sink: Binary file-like object

    Returns:
        Number of bytes written
    """
    payload = encode_binary(records, header)
    sink.write(payload)
    return len(payload)


def parse_binary(data: bytes) -> tuple[TimeTagHeader, npt.NDArray]:
    """
    Parse and validate a TTG2 byte string.

    Args:
        data: Complete file contents

    Returns:
        Tuple of (header, structured record array)

    Raises:
        TimeTagFormatError: Subclass naming the defect and its byte offset
    """
    view = memoryview(data)
    if len(view) < 4:
        raise TruncatedRecordError("file ends inside the header", offset=0)
    if bytes(view[:4]) != MAGIC:
        raise BadMagicError(f"bad magic {bytes(view[:4])!r}, expected {MAGIC!r}", offset=0)
    if len(view) < HEADER_SIZE:
        raise TruncatedRecordError("file ends inside the header", offset=len(view))

    magic, version, resolution, channel_count = HEADER_STRUCT.unpack_from(view, 0)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}", offset=4)
    if resolution == 0:
        raise TimeTagFormatError("resolution must be a positive tick length", offset=8)
    header = TimeTagHeader(
        resolution=resolution, channel_count=channel_count, magic=magic, version=version
    )

    body = len(view) - HEADER_SIZE
    whole = body // RECORD_SIZE
    if body % RECORD_SIZE:
        offset = HEADER_SIZE + whole * RECORD_SIZE
        raise TruncatedRecordError(
            f"{body % RECORD_SIZE} trailing bytes do not form a {RECORD_SIZE}-byte record",
            offset=offset,
        )

    if whole:
        records = np.frombuffer(view, dtype=RECORD_DTYPE, count=whole, offset=HEADER_SIZE).copy()
    else:
        records = np.empty(0, dtype=RECORD_DTYPE)
    stamps = records["timestamp"]
    regress = np.flatnonzero(stamps[1:] < stamps[:-1])
    if regress.size:
        index = int(regress[0]) + 1
        raise TimestampRegressionError(
            f"record {index} goes back in time", offset=HEADER_SIZE + index * RECORD_SIZE
        )
    over = np.flatnonzero(records["channel"] >= channel_count)
    if over.size:
        index = int(over[0])
        raise ChannelOverflowError(
            f"channel {int(records['channel'][index])} >= channel_count {channel_count}",
            offset=HEADER_SIZE + index * RECORD_SIZE,
        )

    logger.debug("parsed %d TTG2 records, resolution %d ps", whole, resolution)
    return header, records


def parse_csv(text: str) -> npt.NDArray:
    """
    Parse ``timestamp_ps,channel`` CSV text.

    Returns:
        Structured record array with timestamps in picoseconds

    Raises:
        TimeTagFormatError: Subclass naming the defect and its 1-based line number
    """
    reader = csv.reader(io.StringIO(text))
    try:
        first = next(reader)
    except StopIteration:
        raise CsvFieldError("missing header line", line=1) from None
    if tuple(cell.strip() for cell in first) != CSV_HEADER:
        raise CsvFieldError(f"header must be {','.join(CSV_HEADER)}", line=1)

    rows: list[tuple[int, int]] = []
    previous = -1
    for line_number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise CsvFieldError(f"expected 2 fields, found {len(row)}", line=line_number)
        try:
            timestamp = int(row[0].strip())
            channel = int(row[1].strip())
        except ValueError:
            raise CsvFieldError(f"non-numeric field in {row!r}", line=line_number) from None
        if not 0 <= timestamp < 2**64:
            raise CsvFieldError(f"timestamp {timestamp} out of range", line=line_number)
        if not 0 <= channel < MAX_CHANNELS:
            raise ChannelOverflowError(f"channel {channel} out of range", line=line_number)
        if timestamp < previous:
            raise TimestampRegressionError("timestamp goes back in time", line=line_number)
        previous = timestamp
        rows.append((timestamp, channel))

    return np.array(rows, dtype=RECORD_DTYPE)


def format_csv(records: Iterable[TimeTagRecord] | npt.NDArray, resolution: int = 1) -> str:
    """Render records as CSV, converting ticks to picoseconds."""
    array = as_record_array(records)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for ts, ch in zip(array["timestamp"].tolist(), array["channel"].tolist()):
        writer.writerow((ts * resolution, ch))
    return out.getvalue()


def picoseconds_to_ticks(records: npt.NDArray, resolution: int) -> npt.NDArray:
    """Convert picosecond timestamps to ticks of ``resolution`` ps; must divide exactly."""
    if resolution < 1:
        raise ConfigurationError("must be >= 1", field="timetag.resolution_ps")
    out = records.copy()
    if resolution == 1:
        return out
    remainder = records["timestamp"] % np.uint64(resolution)
    bad = np.flatnonzero(remainder)
    if bad.size:
        raise CsvFieldError(
            f"timestamp {int(records['timestamp'][bad[0]])} ps is not a multiple of "
            f"the {resolution} ps resolution",
            line=int(bad[0]) + 2,
        )
    out["timestamp"] = records["timestamp"] // np.uint64(resolution)
    return out


def export_series(series: ClickSeries, grid: WindowGrid, resolution: int = 1) -> tuple[TimeTagHeader, npt.NDArray]:
    """
    Turn a ClickSeries into time tags, one per click at its window midpoint.

    Returns:
        Tuple of (header, sorted record array); channel d is detector d
    """
    check_resolution(grid, resolution)
    if series.detector_count > MAX_CHANNELS:
        raise ChannelOverflowError(f"{series.detector_count} detectors exceed {MAX_CHANNELS} channels")
    detector, window = np.nonzero(series.clicks)
    ticks = np.floor((window + 0.5) * grid.window_duration / resolution).astype(np.uint64)
    order = np.lexsort((detector, ticks))
    records = np.empty(order.size, dtype=RECORD_DTYPE)
    records["timestamp"] = ticks[order]
    records["channel"] = detector[order].astype(np.uint8)
    header = TimeTagHeader(resolution=resolution, channel_count=series.detector_count)
    return header, records


def bin_to_windows(
    records: Iterable[TimeTagRecord] | npt.NDArray,
    grid: WindowGrid,
    weights: WindowWeights,
    channel_map: Mapping[int, int] | Sequence[int] | None = None,
    resolution: int = 1,
    on_overflow: OverflowPolicy = "error",
    fingerprint: str = "",
) -> ClickSeries:
    """
    Collapse time tags into binary windowed click sequences.

    Window index is floor(timestamp * resolution / window_duration); a tick on a
    window boundary belongs to the later window. Several tags on one channel in
    one window collapse to a single click and count as collisions.

    Args:
        records: Time tags sorted by timestamp
        grid: Detector window grid
        weights: Envelope weights carrying the on/off mask for the grid
        channel_map: Channel -> detector row (default: channel i is detector i)
        resolution: Picoseconds per tick
        on_overflow: "error" or "discard" for tags beyond the grid span
        fingerprint: Provenance string stored on the series

    Returns:
        ClickSeries with collision_count set
    """
    array = as_record_array(records)
    if weights.n != grid.window_count:
        raise ConfigurationError("weights do not match the window grid", field="grid.window_count")

    if channel_map is None:
        detectors = int(array["channel"].max()) + 1 if array.size else 2
        mapping = {ch: ch for ch in range(detectors)}
    elif isinstance(channel_map, Mapping):
        mapping = dict(channel_map)
    else:
        mapping = {ch: row for ch, row in enumerate(channel_map)}
    detector_count = max(mapping.values()) + 1 if mapping else 0

    lookup = np.full(MAX_CHANNELS, -1, dtype=np.int64)
    for ch, row in mapping.items():
        lookup[ch] = row
    rows = lookup[array["channel"]]
    unmapped = np.flatnonzero(rows < 0)
    if unmapped.size:
        raise ConfigurationError(
            f"channel {int(array['channel'][unmapped[0]])} has no detector", field="channel_map"
        )

    # Compare in ticks so that ticks * resolution never wraps around uint64
    stamps = array["timestamp"]
    span_ticks = math.ceil(grid.span / resolution)
    beyond = stamps >= np.uint64(min(span_ticks, 2**64 - 1))
    if np.any(beyond):
        if on_overflow == "error":
            index = int(np.flatnonzero(beyond)[0])
            raise TimestampOverflowError(
                f"record {index} at tick {int(stamps[index])} ({resolution} ps per tick) is "
                f"beyond the grid span {grid.span} ps"
            )
        logger.warning("discarding %d time tags beyond the grid span", int(beyond.sum()))
        stamps, rows = stamps[~beyond], rows[~beyond]

    picoseconds = stamps * np.uint64(resolution)
    duration = grid.window_duration
    if float(duration).is_integer():
        window = (picoseconds // np.uint64(int(duration))).astype(np.int64)
    else:
        window = np.floor(picoseconds.astype(np.float64) / duration).astype(np.int64)
    # float spans can leave a tick just past the last window
    window = np.minimum(window, grid.window_count - 1)

    clicks = np.zeros((detector_count, grid.window_count), dtype=bool)
    clicks[rows, window] = True
    hits = rows * grid.window_count + window
    collisions = int(hits.size - np.unique(hits).size)
    if collisions:
        logger.info("collapsed %d same-window collisions", collisions)

    return ClickSeries(
        clicks=clicks, weights=weights, fingerprint=fingerprint, collision_count=collisions
    )


def check_resolution(grid: WindowGrid, resolution: int) -> int:
    """Ticks must be at most half a window, so exported midpoints bin back to their window."""
    if resolution < 1:
        raise ConfigurationError("must be >= 1", field="timetag.resolution_ps")
    if grid.window_duration < 2 * resolution:
        raise ConfigurationError(
            f"window_duration {grid.window_duration} ps needs ticks of at most half a window",
            field="timetag.resolution_ps",
        )
    return resolution
