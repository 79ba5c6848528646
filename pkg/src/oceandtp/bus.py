"""Topic-based publish-subscribe bus and its length-prefixed wire framing.

Nodes are loosely coupled: each publishes envelopes to topics and/or pulls
them from per-subscription FIFO queues. The bus retains nothing; history is
the shadow log's job. The frame codec here is also the on-disk record format
used by the shadow module, so there is exactly one framing to get right.
"""

from __future__ import annotations

import struct
import threading
from collections import deque
from dataclasses import dataclass, field

from .msgschema import TruncatedError


class SequenceGapError(Exception):
    def __init__(self, publisher_id: str, topic: str, expected: int, got: int):
        super().__init__(
            f"publisher {publisher_id!r} on {topic!r}: expected seq {expected}, got {got}"
        )
        self.expected = expected
        self.got = got


class DuplicateSubscriberError(Exception):
    def __init__(self, topic: str, subscriber_id: str):
        super().__init__(f"{subscriber_id!r} already subscribed to {topic!r}")


class LengthMismatchError(ValueError):
    def __init__(self, declared: int, actual: int):
        super().__init__(f"declared frame length {declared}, actual {actual}")
        self.declared = declared
        self.actual = actual


@dataclass(frozen=True)
class Envelope:
    topic: str
    publisher_id: str
    seq: int
    t_ns: int
    schema_id: int
    payload: bytes


@dataclass
class Subscription:
    topic: str
    subscriber_id: str
    queue: deque = field(default_factory=deque)

    def pop(self) -> Envelope | None:
        """Next pending envelope in FIFO order, or None."""
        return self.queue.popleft() if self.queue else None

    def drain(self) -> list[Envelope]:
        out = list(self.queue)
        self.queue.clear()
        return out

    def __len__(self) -> int:
        return len(self.queue)


class Bus:
    """In-process pub/sub. Delivery is a synchronous enqueue; consumption is
    pull-based, which keeps discrete-event runs deterministic."""

    def __init__(self):
        self._subs: dict[str, dict[str, Subscription]] = {}
        self._next_seq: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    def subscribe(self, topic: str, subscriber_id: str) -> Subscription:
        with self._lock:
            per_topic = self._subs.setdefault(topic, {})
            if subscriber_id in per_topic:
                raise DuplicateSubscriberError(topic, subscriber_id)
            sub = Subscription(topic, subscriber_id)
            per_topic[subscriber_id] = sub
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            self._subs.get(sub.topic, {}).pop(sub.subscriber_id, None)

    def publish(self, envelope: Envelope) -> int:
        """Append the envelope to every current subscription on its topic.

        Returns the number of subscriptions that received it. Enforces the
        per-(publisher, topic) seq-increments-by-one contract."""
        if not envelope.topic:
            raise ValueError("empty topic")
        with self._lock:
            key = (envelope.publisher_id, envelope.topic)
            expected = self._next_seq.get(key, 0)
            if envelope.seq != expected:
                raise SequenceGapError(envelope.publisher_id, envelope.topic,
                                       expected, envelope.seq)
            self._next_seq[key] = expected + 1
            subs = list(self._subs.get(envelope.topic, {}).values())
        for sub in subs:
            sub.queue.append(envelope)
        return len(subs)

    def next_seq(self, publisher_id: str, topic: str) -> int:
        with self._lock:
            return self._next_seq.get((publisher_id, topic), 0)


# Wire framing: uint32 LE total length (of everything after the prefix), then
# uint16-prefixed topic and publisher_id (UTF-8), uint64 seq, int64 t_ns,
# uint8 schema_id, uint32-prefixed payload.

def transport_frame(envelope: Envelope) -> bytes:
    topic = envelope.topic.encode("utf-8")
    pub = envelope.publisher_id.encode("utf-8")
    body = b"".join([
        struct.pack("<H", len(topic)), topic,
        struct.pack("<H", len(pub)), pub,
        struct.pack("<Q", envelope.seq),
        struct.pack("<q", envelope.t_ns),
        struct.pack("<B", envelope.schema_id),
        struct.pack("<I", len(envelope.payload)), envelope.payload,
    ])
    return struct.pack("<I", len(body)) + body


def transport_unframe(data: bytes) -> Envelope:
    """Inverse of transport_frame over one complete frame."""
    if len(data) < 4:
        raise TruncatedError(0)
    (total,) = struct.unpack_from("<I", data, 0)
    if total != len(data) - 4:
        raise LengthMismatchError(total, len(data) - 4)
    envelope, end = _parse_body(data, 4)
    if end != len(data):
        raise LengthMismatchError(total, end - 4)
    return envelope


def _parse_body(data: bytes, offset: int) -> tuple[Envelope, int]:
    def need(n: int):
        if offset + n > len(data):
            raise TruncatedError(offset)

    need(2)
    (tlen,) = struct.unpack_from("<H", data, offset)
    offset += 2
    need(tlen)
    topic = data[offset:offset + tlen].decode("utf-8")
    offset += tlen
    need(2)
    (plen,) = struct.unpack_from("<H", data, offset)
    offset += 2
    need(plen)
    publisher_id = data[offset:offset + plen].decode("utf-8")
    offset += plen
    need(8 + 8 + 1 + 4)
    (seq,) = struct.unpack_from("<Q", data, offset)
    (t_ns,) = struct.unpack_from("<q", data, offset + 8)
    (schema_id,) = struct.unpack_from("<B", data, offset + 16)
    (paylen,) = struct.unpack_from("<I", data, offset + 17)
    offset += 21
    need(paylen)
    payload = data[offset:offset + paylen]
    offset += paylen
    return Envelope(topic, publisher_id, seq, t_ns, schema_id, payload), offset


class FrameReader:
    """Incremental decoder for a byte stream of frames (TCP-style transport
    or an on-disk log): feed() arbitrary chunks, pop complete envelopes."""

    def __init__(self):
        self._buf = bytearray()
        self.consumed = 0  # bytes fully consumed from the stream so far

    def feed(self, chunk: bytes) -> list[Envelope]:
        self._buf += chunk
        out = []
        while True:
            if len(self._buf) < 4:
                break
            (total,) = struct.unpack_from("<I", self._buf, 0)
            if len(self._buf) < 4 + total:
                break
            frame = bytes(self._buf[:4 + total])
            del self._buf[:4 + total]
            out.append(transport_unframe(frame))
            self.consumed += 4 + total
        return out

    @property
    def pending(self) -> int:
        """Bytes buffered that do not yet form a complete frame."""
        return len(self._buf)
