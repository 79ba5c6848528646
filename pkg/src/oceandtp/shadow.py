"""The digital shadow: append-only on-disk log of published envelopes, plus
replay that feeds a prototype from recordings instead of live devices.

File format: 9-byte magic ``DTSHADOW1``, then records framed exactly like the
bus wire transport — one codec for the wire and the disk.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Callable, Iterable

from .bus import Envelope, FrameReader, transport_frame

MAGIC = b"DTSHADOW1"

ShadowRecord = Envelope  # a record is a captured envelope, same fields


class TimeRegressionError(Exception):
    def __init__(self, t_ns: int, last_t_ns: int):
        super().__init__(f"record at {t_ns} ns precedes last record at {last_t_ns} ns")
        self.t_ns = t_ns


class CorruptLogError(Exception):
    def __init__(self, offset: int, detail: str = ""):
        super().__init__(f"corrupt shadow log at offset {offset}" + (f": {detail}" if detail else ""))
        self.offset = offset


class ShadowLogWriter:
    """Single-writer append handle. Records must be non-decreasing in t_ns;
    replay correctness depends on it, so regressions are rejected at write
    time rather than discovered later."""

    def __init__(self, path):
        self.path = Path(path)
        self._last_t_ns: int | None = None
        self.count = 0
        self._fh = open(self.path, "wb")
        self._fh.write(MAGIC)

    def record(self, envelope: Envelope) -> int:
        if self._last_t_ns is not None and envelope.t_ns < self._last_t_ns:
            raise TimeRegressionError(envelope.t_ns, self._last_t_ns)
        self._last_t_ns = envelope.t_ns
        self._fh.write(transport_frame(envelope))
        self.count += 1
        return self.count

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_shadow_log(path) -> list[Envelope]:
    """Parse a shadow log to completion; a bad magic or a truncated/garbled
    tail raises CorruptLogError with the offset of the offending record."""
    data = Path(path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise CorruptLogError(0, "bad magic")
    reader = FrameReader()
    try:
        records = reader.feed(data[len(MAGIC):])
    except ValueError as exc:
        raise CorruptLogError(len(MAGIC) + reader.consumed, str(exc)) from None
    if reader.pending:
        raise CorruptLogError(len(MAGIC) + reader.consumed, "truncated record")
    return records


def replay(source, sink: Callable[[Envelope], None],
           speed: float | None = None) -> int:
    """Republish recorded envelopes to `sink` in original order.

    `source` is a log path or an iterable of records. With a finite speed the
    inter-record gaps are honored against the wall clock, scaled by 1/speed;
    speed=None replays as fast as possible (gaps collapse, order and the
    original t_ns values inside the envelopes are untouched)."""
    if speed is not None and speed <= 0:
        raise ValueError("speed must be > 0")
    records = source if isinstance(source, (list, tuple)) else None
    if records is None:
        if isinstance(source, (str, Path)):
            records = read_shadow_log(source)
        else:
            records = list(source)
    if not records:
        return 0
    t0_ns = records[0].t_ns
    wall0 = time.monotonic()
    for env in records:
        if speed is not None:
            due = wall0 + (env.t_ns - t0_ns) / 1e9 / speed
            delay = due - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        sink(env)
    return len(records)


def decode_timeseries(records: Iterable[Envelope], topic: str, registry,
                      value_field: str | None = None) -> list[tuple[int, float]]:
    """(t_ns, value) points for one topic, decoding payloads via the schema
    registry. The value is the named field, defaulting to the first float
    field of the schema."""
    from .msgschema import decode_binary  # local import to keep module deps one-way

    points = []
    for env in records:
        if env.topic != topic:
            continue
        schema = registry.get(env.schema_id)
        value = decode_binary(schema, env.payload)
        names = [f[0] for f in schema.fields]
        if value_field is not None:
            idx = names.index(value_field)
        else:
            idx = next((i for i, (_, ft) in enumerate(schema.fields)
                        if not ft.is_array and ft.base in ("float32", "float64")), None)
            if idx is None:
                continue
        points.append((env.t_ns, value.values[idx]))
    return points
