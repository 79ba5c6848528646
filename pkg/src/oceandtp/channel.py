"""Full-duplex byte-stream endpoints with switchable backings.

Every device connection in the framework goes through a ByteChannel, so the
same protocol code runs against an emulated virtual pair, a loopback, or a
real serial device — selected by configuration, with the DTP_EMULATED
environment variable forcing the emulated path the way the original rig
switched containers onto socat-created virtual TTYs.

Reads are non-blocking: read(max) returns whatever is buffered, up to max,
possibly b"". One reader and one writer per endpoint.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass


class NameInUseError(Exception):
    def __init__(self, name: str):
        super().__init__(f"virtual pair {name!r} already fully claimed")
        self.name = name


class DeviceUnavailableError(Exception):
    def __init__(self, address: str, reason: str = ""):
        super().__init__(f"cannot open device {address!r}" + (f": {reason}" if reason else ""))
        self.address = address


@dataclass(frozen=True)
class ChannelConfig:
    mode: str                      # "virtual" | "loopback" | "real"
    address: str = ""              # pair name (virtual) or device path (real)
    baud_hint: int | None = None   # documentation only in simulation

    def __post_init__(self):
        if self.mode not in ("virtual", "loopback", "real"):
            raise ValueError(f"unknown channel mode {self.mode!r}")
        if self.mode in ("virtual", "real") and not self.address:
            raise ValueError(f"mode {self.mode!r} requires an address")


class ByteChannel:
    """Endpoint contract: write(data), read(max) -> bytes, close()."""

    def write(self, data: bytes) -> int:
        raise NotImplementedError

    def read(self, max_bytes: int = 65536) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        pass


class _PipeEnd(ByteChannel):
    """One side of a virtual pair: writes go to the peer's inbox. The inbox
    lock makes one concurrent reader + one writer safe."""

    def __init__(self):
        self._inbox = bytearray()
        self._inbox_lock = threading.Lock()
        self._peer: _PipeEnd | None = None
        self._closed = False

    def write(self, data: bytes) -> int:
        if self._closed:
            raise ValueError("write to closed channel")
        with self._peer._inbox_lock:
            self._peer._inbox += data
        return len(data)

    def read(self, max_bytes: int = 65536) -> bytes:
        with self._inbox_lock:
            out = bytes(self._inbox[:max_bytes])
            del self._inbox[:max_bytes]
        return out

    def close(self) -> None:
        self._closed = True


class LoopbackChannel(ByteChannel):
    """read() returns this endpoint's own writes, FIFO."""

    def __init__(self):
        self._buf = bytearray()

    def write(self, data: bytes) -> int:
        self._buf += data
        return len(data)

    def read(self, max_bytes: int = 65536) -> bytes:
        out = bytes(self._buf[:max_bytes])
        del self._buf[:max_bytes]
        return out


class RealChannel(ByteChannel):
    """A platform serial-device path opened non-blocking (PTYs included).
    TTYs are switched to raw mode, no echo — the same line discipline the
    socat-created virtual TTYs use."""

    def __init__(self, path: str):
        try:
            self._fd = os.open(path, os.O_RDWR | os.O_NONBLOCK | os.O_NOCTTY)
        except OSError as exc:
            raise DeviceUnavailableError(path, str(exc)) from None
        self._path = path
        if os.isatty(self._fd):
            import tty
            tty.setraw(self._fd)

    def write(self, data: bytes) -> int:
        return os.write(self._fd, data)

    def read(self, max_bytes: int = 65536) -> bytes:
        try:
            return os.read(self._fd, max_bytes)
        except BlockingIOError:
            return b""

    def close(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None


class VirtualPairRegistry:
    """Named virtual pairs, socat-style: two endpoints per name."""

    def __init__(self):
        self._pairs: dict[str, tuple[_PipeEnd, _PipeEnd]] = {}
        self._claimed: dict[str, int] = {}

    def create_pair(self, name: str) -> tuple[ByteChannel, ByteChannel]:
        """Create both endpoints of a named pair at once."""
        if name in self._pairs:
            raise NameInUseError(name)
        a, b = _PipeEnd(), _PipeEnd()
        a._peer, b._peer = b, a
        self._pairs[name] = (a, b)
        self._claimed[name] = 2
        return a, b

    def open(self, name: str) -> ByteChannel:
        """Claim one endpoint of the named pair, creating the pair on first
        open. The first open gets side A, the second side B; a third open of
        the same name fails."""
        if name not in self._pairs:
            a, b = _PipeEnd(), _PipeEnd()
            a._peer, b._peer = b, a
            self._pairs[name] = (a, b)
            self._claimed[name] = 1
            return a
        claimed = self._claimed[name]
        if claimed >= 2:
            raise NameInUseError(name)
        self._claimed[name] = claimed + 1
        return self._pairs[name][1]

    def reset(self) -> None:
        self._pairs.clear()
        self._claimed.clear()


# Process-wide registry, mirroring how named PTY links are global to a host.
_registry = VirtualPairRegistry()


def default_registry() -> VirtualPairRegistry:
    return _registry


def create_virtual_pair(name: str, registry: VirtualPairRegistry | None = None):
    return (registry or _registry).create_pair(name)


def open_channel(config: ChannelConfig, env: dict[str, str] | None = None,
                 registry: VirtualPairRegistry | None = None) -> ByteChannel:
    """Open an endpoint of the backing selected by config and environment.

    DTP_EMULATED=1 in env forces virtual mode regardless of config; unset or
    "0" leaves config.mode in charge. The returned endpoint honors the same
    read/write contract for every backing.
    """
    env = os.environ if env is None else env
    mode = config.mode
    if env.get("DTP_EMULATED", "0") == "1":
        mode = "virtual"
    if mode == "loopback":
        return LoopbackChannel()
    if mode == "virtual":
        # when DTP_EMULATED overrides real mode, the device path doubles as
        # the pair name, so both parties land on the same virtual pair
        return (registry or _registry).open(config.address or "default")
    return RealChannel(config.address)
