"""Byte-exact device emulators for the test-rig hardware.

Three devices: the Lander Control Unit speaking a CR/LF line protocol over a
serial channel, the oxygen optode as a deterministic signal model (or a
shadow-log replay source), and the acoustic modem with an AT-style command
surface bridging a channel to the acoustic medium.

The in/out formats here are the contract: control software must not be able
to tell an emulator from the device it stands in for.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

from .channel import ByteChannel
from .medium import MAX_PAYLOAD, AcousticMedium, Frame

CRLF = "\r\n"


# --- oxygen optode -----------------------------------------------------------

@dataclass(frozen=True)
class OptodeModel:
    """Sinusoid + seeded noise. Identical (model, t_ns) pairs always yield
    identical samples, which is what makes record/replay comparable."""

    baseline_umol_per_l: float = 280.0
    amplitude_umol_per_l: float = 0.0
    period_s: float = 86400.0
    noise_std_umol_per_l: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.period_s <= 0:
            raise ValueError("period_s must be > 0")
        if self.noise_std_umol_per_l < 0:
            raise ValueError("noise_std_umol_per_l must be >= 0")

    def sample(self, t_ns: int) -> float:
        t_s = t_ns / 1e9
        v = self.baseline_umol_per_l + self.amplitude_umol_per_l * math.sin(
            2.0 * math.pi * t_s / self.period_s)
        if self.noise_std_umol_per_l > 0:
            rng = random.Random(f"{self.seed}:{t_ns}")
            v += rng.gauss(0.0, self.noise_std_umol_per_l)
        return v


def optode_sample(model: OptodeModel, t_ns: int) -> float:
    if t_ns < 0:
        raise ValueError("t_ns must be >= 0")
    return model.sample(t_ns)


class ReplayOptode:
    """Sensor stand-in fed from recorded samples instead of a signal model;
    each call hands out the next recorded value in order."""

    def __init__(self, samples):
        self._samples = list(samples)
        self._idx = 0

    def sample(self, t_ns: int) -> float:
        if self._idx >= len(self._samples):
            raise IndexError("replay source exhausted")
        v = self._samples[self._idx]
        self._idx += 1
        return v


# --- Lander Control Unit -----------------------------------------------------

BATTERY_DRAIN_PER_SAMPLE = 0.001  # pct per sample taken


@dataclass
class LcuState:
    battery_pct: float = 100.0
    sampling_interval_s: int = 3600
    samples_taken: int = 0
    optode: object = None  # anything with .sample(t_ns) -> float


def lcu_handle_line(state: LcuState, line: str, t_ns: int = 0) -> tuple[LcuState, str]:
    """Handle one CR/LF-terminated command line; always exactly one response.

    $STATUS            -> !STATUS,OK,<battery:1dp>,<interval>
    $GETO2             -> !O2,<value:3dp>,umol/l     (samples the optode now)
    $SAMPLE,<n>        -> !ACK,SAMPLE,<n>            (sets the interval)
    anything else      -> !ERR,UNKNOWN_CMD
    """
    cmd = line.rstrip("\r\n")
    if cmd == "$STATUS":
        return state, f"!STATUS,OK,{state.battery_pct:.1f},{state.sampling_interval_s}{CRLF}"
    if cmd == "$GETO2":
        value = state.optode.sample(t_ns)
        state.samples_taken += 1
        state.battery_pct = max(0.0, state.battery_pct - BATTERY_DRAIN_PER_SAMPLE)
        return state, f"!O2,{value:.3f},umol/l{CRLF}"
    if cmd.startswith("$SAMPLE,"):
        arg = cmd[len("$SAMPLE,"):]
        if arg.isdigit() and 1 <= int(arg) <= 0xFFFFFFFF:
            state.sampling_interval_s = int(arg)
            return state, f"!ACK,SAMPLE,{int(arg)}{CRLF}"
    return state, f"!ERR,UNKNOWN_CMD{CRLF}"


class LcuEmulator:
    """LCU behind a byte channel: buffers partial lines, answers each one."""

    def __init__(self, channel: ByteChannel, state: LcuState | None = None,
                 clock: Callable[[], int] = lambda: 0):
        self.channel = channel
        self.state = state if state is not None else LcuState()
        self.clock = clock
        self._buf = b""

    def pump(self) -> int:
        """Process every complete line currently buffered; returns responses sent."""
        self._buf += self.channel.read()
        count = 0
        while b"\n" in self._buf:
            line, self._buf = self._buf.split(b"\n", 1)
            _, response = lcu_handle_line(
                self.state, line.decode("ascii", "replace"), self.clock())
            self.channel.write(response.encode("ascii"))
            count += 1
        return count


# --- acoustic modem ----------------------------------------------------------

@dataclass
class ModemState:
    local_addr: int
    medium: AcousticMedium = None
    # the sender-side FIFO lives in the medium's per-link serialization

    def __post_init__(self):
        if not 1 <= self.local_addr <= 254:
            raise ValueError(f"modem address {self.local_addr} out of range 1-254")


def modem_handle_line(state: ModemState, line: str, trailing: bytes = b"",
                      t_ns: int | None = None) -> tuple[ModemState, str]:
    """Handle one AT*SENDIM command plus its raw payload bytes.

    AT*SENDIM,<dest>,<len>\\r\\n + <len payload bytes> queues one frame to the
    medium and answers OK; oversized, self/zero-addressed, or malformed
    commands answer ERROR,* without aborting."""
    cmd = line.rstrip("\r\n")
    parts = cmd.split(",")
    if len(parts) != 3 or parts[0] != "AT*SENDIM":
        return state, f"ERROR,SYNTAX{CRLF}"
    try:
        dest, length = int(parts[1]), int(parts[2])
    except ValueError:
        return state, f"ERROR,SYNTAX{CRLF}"
    if not (0 <= dest <= 255 and 0 <= length <= 255):
        return state, f"ERROR,SYNTAX{CRLF}"
    if length > MAX_PAYLOAD:
        return state, f"ERROR,TOO_LONG{CRLF}"
    if dest == 0 or dest == state.local_addr:
        return state, f"ERROR,BAD_ADDR{CRLF}"
    if len(trailing) != length:
        return state, f"ERROR,SYNTAX{CRLF}"
    state.medium.schedule_send(Frame(state.local_addr, dest, trailing), t_ns)
    return state, f"OK{CRLF}"


class ModemEmulator:
    """Modem behind a byte channel: parses SENDIM commands (header line, then
    exactly the announced payload bytes — payloads may contain CR/LF), and
    surfaces medium deliveries as RECVIM lines plus raw bytes."""

    def __init__(self, channel: ByteChannel, local_addr: int, medium: AcousticMedium):
        self.channel = channel
        self.state = ModemState(local_addr, medium)
        self.medium = medium
        medium.register(local_addr, self.deliver)
        self._buf = b""
        self._pending_line: str | None = None
        self._pending_len = 0
        self.on_deliver: Callable[[Frame], None] | None = None

    def pump(self) -> int:
        """Consume buffered commands; returns number of responses written."""
        self._buf += self.channel.read()
        count = 0
        while True:
            if self._pending_line is not None:
                if len(self._buf) < self._pending_len:
                    break
                payload, self._buf = self._buf[:self._pending_len], self._buf[self._pending_len:]
                line, self._pending_line = self._pending_line, None
                _, response = modem_handle_line(self.state, line, payload)
                self.channel.write(response.encode("ascii"))
                count += 1
                continue
            if b"\n" not in self._buf:
                break
            raw, self._buf = self._buf.split(b"\n", 1)
            line = raw.decode("ascii", "replace")
            announced = _announced_payload_len(line)
            if announced is None:
                _, response = modem_handle_line(self.state, line)
                self.channel.write(response.encode("ascii"))
                count += 1
            else:
                # wait for the raw payload before answering so the byte
                # stream stays framed even for invalid commands
                self._pending_line = line
                self._pending_len = announced
        return count

    def deliver(self, frame: Frame) -> None:
        header = f"RECVIM,{frame.src},{frame.len}{CRLF}"
        self.channel.write(header.encode("ascii") + frame.payload)
        if self.on_deliver is not None:
            self.on_deliver(frame)


def _announced_payload_len(line: str):
    """Payload byte count a well-formed SENDIM header announces, else None."""
    parts = line.rstrip("\r\n").split(",")
    if len(parts) != 3 or parts[0] != "AT*SENDIM":
        return None
    try:
        dest, length = int(parts[1]), int(parts[2])
    except ValueError:
        return None
    if not (0 <= dest <= 255 and 0 <= length <= 255):
        return None
    return length
