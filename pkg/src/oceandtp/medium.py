"""Discrete-event acoustic medium: 64-byte/s serialized sender links,
distance-based propagation delay, seeded per-receiver loss, unicast and
broadcast delivery.

The rate limit is enforced structurally — each sender's link is a FIFO that
is busy for (header + payload) / rate seconds per frame — and measured
independently by bytes_in_window, which pro-rates wire bytes over arbitrary
windows using exact rational arithmetic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .events import EventLoop

BROADCAST = 255
MAX_PAYLOAD = 64
HEADER_BYTES = 3  # src, dest, len

_NS = 1_000_000_000


class UnknownAddressError(Exception):
    def __init__(self, addr: int):
        super().__init__(f"no modem registered at address {addr}")
        self.addr = addr


@dataclass(frozen=True)
class Frame:
    src: int
    dest: int
    payload: bytes

    def __post_init__(self):
        if not 1 <= self.src <= 254:
            raise ValueError(f"src address {self.src} out of range 1-254")
        if not 1 <= self.dest <= 255:
            raise ValueError(f"dest address {self.dest} out of range 1-255")
        if len(self.payload) > MAX_PAYLOAD:
            raise ValueError(f"payload {len(self.payload)} exceeds {MAX_PAYLOAD} bytes")

    @property
    def len(self) -> int:
        return len(self.payload)

    @property
    def wire_bytes(self) -> int:
        return HEADER_BYTES + len(self.payload)


@dataclass(frozen=True)
class MediumConfig:
    rate_bytes_per_s: int = 64
    sound_speed_m_per_s: float = 1500.0
    distances_m: dict = field(default_factory=dict)  # (lo, hi) addr pair -> meters
    loss_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rate_bytes_per_s <= 0:
            raise ValueError("rate must be positive")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")

    def distance(self, a: int, b: int) -> float:
        return self.distances_m.get((min(a, b), max(a, b)), 0.0)


@dataclass(frozen=True)
class Delivery:
    dest: int
    t_deliver_ns: int | None  # None when dropped
    dropped: bool


@dataclass(frozen=True)
class Transmission:
    """One occupancy of a sender's link, for rate accounting."""
    src: int
    dest: int           # frame destination (may be BROADCAST)
    start_ns: int
    end_ns: int
    wire_bytes: int
    frame_seq: int


class AcousticMedium:
    def __init__(self, config: MediumConfig, loop: EventLoop | None = None):
        self.config = config
        self.loop = loop if loop is not None else EventLoop()
        self._receivers: dict[int, Callable[[Frame], None]] = {}
        self._link_free_ns: dict[int, int] = {}
        self._frame_seq = 0
        self.transmissions: list[Transmission] = []
        # per (src, dest) receiver-link conservation counters
        self.sent: dict[tuple[int, int], int] = {}
        self.delivered: dict[tuple[int, int], int] = {}
        self.dropped: dict[tuple[int, int], int] = {}

    def register(self, addr: int, deliver: Callable[[Frame], None]) -> None:
        if addr in self._receivers:
            raise ValueError(f"address {addr} already registered")
        if not 1 <= addr <= 254:
            raise ValueError(f"address {addr} out of range 1-254")
        self._receivers[addr] = deliver

    def _lost(self, frame_seq: int, dest: int) -> bool:
        if self.config.loss_prob <= 0.0:
            return False
        draw = random.Random(f"{self.config.seed}:{frame_seq}:{dest}").random()
        return draw < self.config.loss_prob

    def schedule_send(self, frame: Frame, t_submit_ns: int | None = None) -> list[Delivery]:
        """Queue a frame on the sender's half-duplex link.

        The link is busy for wire_bytes / rate seconds starting when it is
        free; each receiver gets the frame after its propagation delay unless
        the seeded loss draw discards it. Delivery callbacks are scheduled on
        the event loop; the computed outcomes are also returned."""
        if frame.src not in self._receivers:
            raise UnknownAddressError(frame.src)
        if t_submit_ns is None:
            t_submit_ns = self.loop.now_ns

        if frame.dest == BROADCAST:
            dests = sorted(a for a in self._receivers if a != frame.src)
        else:
            if frame.dest not in self._receivers:
                raise UnknownAddressError(frame.dest)
            dests = [frame.dest]

        tx_ns = round(frame.wire_bytes * _NS / self.config.rate_bytes_per_s)
        start = max(t_submit_ns, self._link_free_ns.get(frame.src, 0))
        end = start + tx_ns
        self._link_free_ns[frame.src] = end

        seq = self._frame_seq
        self._frame_seq += 1
        self.transmissions.append(
            Transmission(frame.src, frame.dest, start, end, frame.wire_bytes, seq))

        outcomes = []
        for dest in dests:
            link = (frame.src, dest)
            self.sent[link] = self.sent.get(link, 0) + 1
            if self._lost(seq, dest):
                self.dropped[link] = self.dropped.get(link, 0) + 1
                outcomes.append(Delivery(dest, None, True))
                continue
            prop_ns = round(
                self.config.distance(frame.src, dest) / self.config.sound_speed_m_per_s * _NS)
            t_deliver = end + prop_ns
            self.delivered[link] = self.delivered.get(link, 0) + 1
            receiver = self._receivers[dest]
            self.loop.schedule_at(t_deliver, lambda r=receiver, f=frame: r(f))
            outcomes.append(Delivery(dest, t_deliver, False))
        return outcomes

    def bytes_in_window(self, src: int, t_start_ns: int,
                        window_ns: int = _NS, dest: int | None = None) -> float:
        """Wire bytes the sender put on the link during [t_start, t_start+window),
        pro-rated by each transmission's overlap fraction. Exact internally."""
        total = Fraction(0)
        w_end = t_start_ns + window_ns
        for tx in self.transmissions:
            if tx.src != src:
                continue
            if dest is not None and tx.dest != dest and tx.dest != BROADCAST:
                continue
            overlap = min(tx.end_ns, w_end) - max(tx.start_ns, t_start_ns)
            if overlap <= 0:
                continue
            if tx.end_ns == tx.start_ns:
                total += tx.wire_bytes
            else:
                total += Fraction(tx.wire_bytes * overlap, tx.end_ns - tx.start_ns)
        return float(total)

    def senders(self) -> list[int]:
        return sorted({tx.src for tx in self.transmissions})

    def busy_span_ns(self) -> tuple[int, int]:
        """(first start, last end) over all transmissions, (0, 0) if none."""
        if not self.transmissions:
            return 0, 0
        return (min(tx.start_ns for tx in self.transmissions),
                max(tx.end_ns for tx in self.transmissions))
