"""Platform and vessel state machines, the application protocol carried in
modem frames, and the orchestration of the four collaboration scenarios on a
deterministic virtual clock.

Scenario a: platforms sample oxygen and uplink it to the vessel.
Scenario b: the vessel sends commands; platforms confirm with their status.
Scenario c: an external event makes the vessel broadcast a reconfiguration.
Scenario d: one platform detects a low-oxygen event and notifies the others.

Every platform talks to its instruments the way the real system does: the
oxygen value travels LCU line protocol -> local publish -> modem frame, so a
scenario run exercises the emulators end to end.
"""

from __future__ import annotations

import queue
import re
import struct
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bus import Bus, Envelope
from .channel import VirtualPairRegistry
from .emulators import LcuEmulator, LcuState, ModemEmulator, OptodeModel, ReplayOptode
from .events import EventLoop
from .medium import BROADCAST, MAX_PAYLOAD, AcousticMedium, MediumConfig
from .msgschema import SchemaRegistry, decode_binary, encode_binary, message_value, parse_schema
from .shadow import ShadowLogWriter, decode_timeseries, read_shadow_log

_NS = 1_000_000_000

# application message type bytes
MSG_DATA = 0x01
MSG_COMMAND = 0x02
MSG_ACK_STATUS = 0x03
MSG_EVENT = 0x04

# command codes
CMD_SET_SAMPLING_INTERVAL = 0x01
CMD_TRIGGER_MEASUREMENT = 0x02
CMD_REPORT_STATUS = 0x03

COMMAND_NAMES = {
    "set_sampling_interval": CMD_SET_SAMPLING_INTERVAL,
    "trigger_measurement": CMD_TRIGGER_MEASUREMENT,
    "report_status": CMD_REPORT_STATUS,
}

# event codes
EVENT_STORM_PREDICTED = 1
EVENT_LOW_OXYGEN_DETECTED = 2

EVENT_NAMES = {
    "storm_predicted": EVENT_STORM_PREDICTED,
    "low_oxygen_detected": EVENT_LOW_OXYGEN_DETECTED,
}

STATUS_OK = 0
STATUS_REJECTED = 1

# the oxygen telemetry schema every platform publishes and uplinks
OXYGEN_SCHEMA_ID = 1
OXYGEN_SCHEMA_TEXT = """\
# oxygen sample uplinked to the vessel
int64 t_ns
float64 o2_umol_per_l
uint32 seq
"""


class ConfigError(Exception):
    pass


# --- application messages ----------------------------------------------------

@dataclass(frozen=True)
class DataMsg:
    schema_id: int
    body: bytes


@dataclass(frozen=True)
class CommandMsg:
    cmd_id: int
    command: int
    interval_s: int = 0  # argument of set_sampling_interval only


@dataclass(frozen=True)
class AckStatusMsg:
    cmd_id: int
    status: int
    battery_pct_x10: int
    sampling_interval_s: int


@dataclass(frozen=True)
class EventMsg:
    event_code: int
    new_sampling_interval_s: int


AppMessage = DataMsg | CommandMsg | AckStatusMsg | EventMsg


def encode_app_message(msg: AppMessage) -> bytes:
    if isinstance(msg, DataMsg):
        out = struct.pack("<BB", MSG_DATA, msg.schema_id) + msg.body
    elif isinstance(msg, CommandMsg):
        out = struct.pack("<BBB", MSG_COMMAND, msg.cmd_id, msg.command)
        if msg.command == CMD_SET_SAMPLING_INTERVAL:
            out += struct.pack("<H", msg.interval_s)
    elif isinstance(msg, AckStatusMsg):
        out = struct.pack("<BBBHH", MSG_ACK_STATUS, msg.cmd_id, msg.status,
                          msg.battery_pct_x10, msg.sampling_interval_s)
    elif isinstance(msg, EventMsg):
        out = struct.pack("<BBH", MSG_EVENT, msg.event_code, msg.new_sampling_interval_s)
    else:
        raise TypeError(f"not an app message: {msg!r}")
    if len(out) > MAX_PAYLOAD:
        raise ValueError(f"encoded message is {len(out)} bytes, frame budget is {MAX_PAYLOAD}")
    return out


def decode_app_message(data: bytes) -> AppMessage:
    if not data:
        raise ValueError("empty payload")
    kind = data[0]
    if kind == MSG_DATA:
        if len(data) < 2:
            raise ValueError("short DATA message")
        return DataMsg(data[1], data[2:])
    if kind == MSG_COMMAND:
        if len(data) < 3:
            raise ValueError("short COMMAND message")
        cmd_id, command = data[1], data[2]
        if command == CMD_SET_SAMPLING_INTERVAL:
            if len(data) != 5:
                raise ValueError("bad set_sampling_interval length")
            return CommandMsg(cmd_id, command, struct.unpack_from("<H", data, 3)[0])
        if command in (CMD_TRIGGER_MEASUREMENT, CMD_REPORT_STATUS):
            if len(data) != 3:
                raise ValueError("bad command length")
            return CommandMsg(cmd_id, command)
        raise ValueError(f"unknown command code {command}")
    if kind == MSG_ACK_STATUS:
        if len(data) != 7:
            raise ValueError("bad ACK_STATUS length")
        cmd_id, status, battery_x10, interval = struct.unpack_from("<BBHH", data, 1)
        return AckStatusMsg(cmd_id, status, battery_x10, interval)
    if kind == MSG_EVENT:
        if len(data) != 4:
            raise ValueError("bad EVENT length")
        code, interval = struct.unpack_from("<BH", data, 1)
        if code not in (EVENT_STORM_PREDICTED, EVENT_LOW_OXYGEN_DETECTED):
            raise ValueError(f"unknown event code {code}")
        return EventMsg(code, interval)
    raise ValueError(f"unknown message type byte {kind:#x}")


# --- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class PlatformSpec:
    platform_id: str
    modem_addr: int
    optode: OptodeModel = field(default_factory=OptodeModel)
    sampling_interval_s: int = 600
    o2_threshold_umol_per_l: float = float("-inf")
    retry_count: int = 2
    ack_timeout_s: float = 30.0
    mode: str = "emulated"             # emulated | real | mixed (status reporting)
    shadow_replay: str | None = None   # recorded log that replaces the optode


@dataclass(frozen=True)
class ScriptedCommand:
    t_s: float
    platform_id: str
    command: str        # name in COMMAND_NAMES
    interval_s: int = 0


@dataclass(frozen=True)
class ExternalEvent:
    t_s: float
    event_code: int = EVENT_STORM_PREDICTED
    new_sampling_interval_s: int = 300


@dataclass(frozen=True)
class SimConfig:
    seed: int
    duration_s: float
    medium: MediumConfig
    platforms: tuple[PlatformSpec, ...]
    vessel_addr: int
    scenario: str
    commands: tuple[ScriptedCommand, ...] = ()
    external_event: ExternalEvent | None = None
    vessel_retry_count: int = 2

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be > 0")
        if self.scenario not in ("a", "b", "c", "d"):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not self.platforms:
            raise ConfigError("at least one platform required")
        addrs = [p.modem_addr for p in self.platforms]
        if len(set(addrs)) != len(addrs):
            raise ConfigError("platform modem addresses must be unique")
        if self.vessel_addr in addrs:
            raise ConfigError("vessel_addr must differ from every platform address")
        ids = [p.platform_id for p in self.platforms]
        if len(set(ids)) != len(ids):
            raise ConfigError("platform ids must be unique")
        for p in self.platforms:
            if not 1 <= p.sampling_interval_s <= 0xFFFF:
                raise ConfigError(
                    f"{p.platform_id}: sampling_interval_s must be 1..65535 "
                    "(status confirmations carry it as uint16)")
        for cmd in self.commands:
            if cmd.command not in COMMAND_NAMES:
                raise ConfigError(f"unknown command {cmd.command!r}")
            if cmd.platform_id not in ids:
                raise ConfigError(f"command targets unknown platform {cmd.platform_id!r}")


# --- modem-side stream parsing shared by both node kinds ----------------------

_RECVIM_RE = re.compile(rb"^RECVIM,(\d{1,3}),(\d{1,3})$")


class _ModemLink:
    """A node's view of its modem: submit frames, collect RECVIM deliveries."""

    def __init__(self, channel, modem: ModemEmulator):
        self.channel = channel
        self.modem = modem
        self._buf = b""
        self._pending: tuple[int, int] | None = None  # (src, len) awaiting payload
        self.responses: list[str] = []

    def send(self, dest: int, payload: bytes) -> None:
        header = f"AT*SENDIM,{dest},{len(payload)}\r\n".encode("ascii")
        self.channel.write(header + payload)
        self.modem.pump()

    def collect(self) -> list[tuple[int, bytes]]:
        """(src, payload) for every complete delivery buffered on the channel."""
        self._buf += self.channel.read()
        out = []
        while True:
            if self._pending is not None:
                src, length = self._pending
                if len(self._buf) < length:
                    break
                out.append((src, self._buf[:length]))
                self._buf = self._buf[length:]
                self._pending = None
                continue
            if b"\n" not in self._buf:
                break
            raw, self._buf = self._buf.split(b"\n", 1)
            raw = raw.rstrip(b"\r")
            m = _RECVIM_RE.match(raw)
            if m:
                self._pending = (int(m.group(1)), int(m.group(2)))
            else:
                self.responses.append(raw.decode("ascii", "replace"))
        return out


# --- platform ----------------------------------------------------------------

class PlatformNode:
    """One ocean observation platform: LCU + optode behind a serial channel,
    modem behind another, its own bus, and its own shadow log."""

    def __init__(self, spec: PlatformSpec, loop: EventLoop, medium: AcousticMedium,
                 registry: SchemaRegistry, pairs: VirtualPairRegistry,
                 vessel_addr: int, shadow_path, detect_low_o2: bool = False):
        self.spec = spec
        self.loop = loop
        self.registry = registry
        self.vessel_addr = vessel_addr
        self.detect_low_o2 = detect_low_o2

        self.bus = Bus()
        self.shadow = ShadowLogWriter(shadow_path)
        self.interval_s = spec.sampling_interval_s
        self.sample_seq = 0
        self.frames_sent = 0
        self.frames_received = 0
        self.decode_failures = 0
        self._was_below = False
        self._timer = None
        self._end_ns = 0
        self._seq: dict[str, int] = {}
        self.events: list[dict] = []

        if spec.shadow_replay:
            points = decode_timeseries(
                read_shadow_log(spec.shadow_replay), f"{spec.platform_id}/o2", registry)
            optode = ReplayOptode([v for _, v in points])
        else:
            optode = spec.optode

        lcu_node_end, lcu_dev_end = pairs.create_pair(f"{spec.platform_id}-lcu")
        self.lcu_channel = lcu_node_end
        self.lcu = LcuEmulator(
            lcu_dev_end,
            LcuState(sampling_interval_s=spec.sampling_interval_s, optode=optode),
            clock=lambda: self.loop.now_ns)

        modem_node_end, modem_dev_end = pairs.create_pair(f"{spec.platform_id}-modem")
        modem = ModemEmulator(modem_dev_end, spec.modem_addr, medium)
        modem.on_deliver = lambda _frame: self.pump()
        self.link = _ModemLink(modem_node_end, modem)

    # -- local instrument access over the serial line

    def _lcu_transact(self, command: str) -> str:
        self.lcu_channel.write(f"{command}\r\n".encode("ascii"))
        self.lcu.pump()
        return self.lcu_channel.read().decode("ascii")

    def read_o2(self) -> float:
        response = self._lcu_transact("$GETO2")
        m = re.match(r"^!O2,([-0-9.]+),umol/l\r\n$", response)
        if not m:
            raise RuntimeError(f"unexpected LCU response {response!r}")
        return float(m.group(1))

    def read_battery_pct(self) -> float:
        response = self._lcu_transact("$STATUS")
        m = re.match(r"^!STATUS,OK,([-0-9.]+),(\d+)\r\n$", response)
        if not m:
            raise RuntimeError(f"unexpected LCU response {response!r}")
        return float(m.group(1))

    # -- publishing and uplink

    def _publish(self, topic: str, schema_id: int, payload: bytes) -> Envelope:
        seq = self._seq.get(topic, 0)
        self._seq[topic] = seq + 1
        env = Envelope(topic, self.spec.platform_id, seq, self.loop.now_ns, schema_id, payload)
        self.bus.publish(env)
        self.shadow.record(env)
        return env

    def _uplink(self, dest: int, msg: AppMessage) -> None:
        self.link.send(dest, encode_app_message(msg))
        self.frames_sent += 1
        self.pump()  # consume the modem's OK so the stream never backs up

    def sample_and_uplink(self) -> float:
        value = self.read_o2()
        schema = self.registry.get(OXYGEN_SCHEMA_ID)
        payload = encode_binary(schema, message_value(
            OXYGEN_SCHEMA_ID, (self.loop.now_ns, value, self.sample_seq)))
        self.sample_seq += 1
        self._publish(f"{self.spec.platform_id}/o2", OXYGEN_SCHEMA_ID, payload)
        self._uplink(self.vessel_addr, DataMsg(OXYGEN_SCHEMA_ID, payload))
        if self.detect_low_o2:
            self._check_threshold(value)
        return value

    def _check_threshold(self, value: float) -> None:
        below = value < self.spec.o2_threshold_umol_per_l
        if below and not self._was_below:
            new_interval = max(1, self.interval_s // 2)
            self.events.append({"t_ns": self.loop.now_ns, "kind": "low_oxygen_detected",
                                "platform": self.spec.platform_id,
                                "o2_umol_per_l": value,
                                "new_sampling_interval_s": new_interval})
            self.set_interval(new_interval)
            for _ in range(self.spec.retry_count + 1):
                self._uplink(BROADCAST, EventMsg(EVENT_LOW_OXYGEN_DETECTED, new_interval))
        self._was_below = below

    # -- timers

    def schedule_first_sample(self, end_ns: int) -> None:
        self._schedule_next(self.loop.now_ns, end_ns)

    def _schedule_next(self, from_ns: int, end_ns: int) -> None:
        t_next = from_ns + self.interval_s * _NS
        self._end_ns = end_ns
        if t_next <= end_ns:
            self._timer = self.loop.schedule_at(t_next, self._on_timer)
        else:
            self._timer = None

    def _on_timer(self) -> None:
        self._timer = None
        self.sample_and_uplink()
        if self._timer is None:  # sampling may reschedule via set_interval
            self._schedule_next(self.loop.now_ns, self._end_ns)

    def set_interval(self, interval_s: int) -> None:
        """Apply a new sampling interval; the next sample fires one full new
        interval from now. A no-op when the value is unchanged, so repeated
        event broadcasts do not keep pushing the timer out."""
        if interval_s == self.interval_s:
            return
        self.interval_s = interval_s
        # keep the LCU's own configuration in step, as a command would
        self._lcu_transact(f"$SAMPLE,{interval_s}")
        if self._timer is not None:
            self._timer.cancel()
        self._schedule_next(self.loop.now_ns, self._end_ns)

    # -- inbound traffic

    def pump(self) -> None:
        for _src, payload in self.link.collect():
            self.frames_received += 1
            try:
                msg = decode_app_message(payload)
            except ValueError:
                self.decode_failures += 1
                continue
            self.handle_message(msg)

    def handle_message(self, msg: AppMessage) -> None:
        if isinstance(msg, CommandMsg):
            if msg.command == CMD_SET_SAMPLING_INTERVAL:
                self.set_interval(msg.interval_s)
                self._ack(msg.cmd_id)
            elif msg.command == CMD_TRIGGER_MEASUREMENT:
                self.sample_and_uplink()
                self._ack(msg.cmd_id)
            elif msg.command == CMD_REPORT_STATUS:
                self._ack(msg.cmd_id)
        elif isinstance(msg, EventMsg):
            self.set_interval(msg.new_sampling_interval_s)
        # DataMsg / AckStatusMsg are vessel-bound; platforms ignore them

    def _ack(self, cmd_id: int) -> None:
        battery_x10 = round(self.read_battery_pct() * 10)
        self._uplink(self.vessel_addr, AckStatusMsg(
            cmd_id, STATUS_OK, battery_x10, self.interval_s))

    def close(self) -> None:
        self.shadow.close()


# --- vessel ------------------------------------------------------------------

class VesselNode:
    """The research-vessel side: one digital twin per platform, command
    tickets with retransmission, external-event broadcasting, and per-twin
    shadow logs of everything received."""

    def __init__(self, config: SimConfig, loop: EventLoop, medium: AcousticMedium,
                 registry: SchemaRegistry, pairs: VirtualPairRegistry, out_dir: Path):
        self.config = config
        self.loop = loop
        self.registry = registry
        self.bus = Bus()
        self._specs = {p.platform_id: p for p in config.platforms}
        self._by_addr = {p.modem_addr: p.platform_id for p in config.platforms}

        node_end, dev_end = pairs.create_pair("vessel-modem")
        modem = ModemEmulator(dev_end, config.vessel_addr, medium)
        modem.on_deliver = lambda _frame: self.pump()
        self.link = _ModemLink(node_end, modem)

        self.shadows = {
            pid: ShadowLogWriter(out_dir / f"dt-{pid}.shadow") for pid in self._specs}
        self.timeseries: dict[str, list[tuple[int, float]]] = {pid: [] for pid in self._specs}
        self.twin_status: dict[str, dict] = {
            pid: {"twin_id": pid, "mode": spec.mode, "battery_pct": None,
                  "sampling_interval_s": spec.sampling_interval_s,
                  "last_contact_t_ns": None}
            for pid, spec in self._specs.items()}

        self.data_received: dict[str, int] = {pid: 0 for pid in self._specs}
        self.frames_sent = 0
        self.decode_failures = 0
        self.events: list[dict] = []
        self._next_cmd_id = 1
        self._pending: dict[int, dict] = {}   # cmd_id -> {platform_id, msg, attempts, timer}
        self.tickets: dict[int, dict] = {}    # cmd_id -> {state, ...}
        self._seq: dict[tuple[str, str], int] = {}
        self.operator_queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()

    # -- operator surface (thread-safe; drained between events)

    def enqueue_command(self, platform_id: str, command: str, interval_s: int = 0) -> int:
        """Queue a command for the next loop iteration; returns its cmd_id."""
        cmd_id = self._reserve_cmd_id()
        self.operator_queue.put(("command", cmd_id, platform_id, command, interval_s))
        with self._lock:
            self.tickets[cmd_id] = {
                "cmd_id": cmd_id, "platform_id": platform_id, "command": command,
                "interval_s": interval_s, "state": "pending",
                "submitted_t_ns": None, "resolved_t_ns": None, "transmissions": 0}
        return cmd_id

    def enqueue_event(self, event_code: int, new_interval_s: int) -> None:
        self.operator_queue.put(("event", event_code, new_interval_s))

    def _reserve_cmd_id(self) -> int:
        with self._lock:
            cmd_id = self._next_cmd_id
            if cmd_id > 0xFF:
                raise ConfigError("more than 255 commands in one run; cmd_id is uint8")
            self._next_cmd_id += 1
        return cmd_id

    def drain_operator_queue(self) -> None:
        while True:
            try:
                item = self.operator_queue.get_nowait()
            except queue.Empty:
                return
            if item[0] == "command":
                _, cmd_id, platform_id, command, interval_s = item
                self._send_command(cmd_id, platform_id, command, interval_s)
            else:
                _, event_code, new_interval_s = item
                self.broadcast_event(event_code, new_interval_s)

    # -- command lifecycle

    def submit_command(self, platform_id: str, command: str, interval_s: int = 0) -> int:
        """Send a command right now (scripted scenarios); returns its cmd_id."""
        cmd_id = self._reserve_cmd_id()
        with self._lock:
            self.tickets[cmd_id] = {
                "cmd_id": cmd_id, "platform_id": platform_id, "command": command,
                "interval_s": interval_s, "state": "pending",
                "submitted_t_ns": None, "resolved_t_ns": None, "transmissions": 0}
        self._send_command(cmd_id, platform_id, command, interval_s)
        return cmd_id

    def _send_command(self, cmd_id: int, platform_id: str, command: str, interval_s: int) -> None:
        msg = CommandMsg(cmd_id, COMMAND_NAMES[command], interval_s)
        with self._lock:
            self.tickets[cmd_id]["submitted_t_ns"] = self.loop.now_ns
        self._pending[cmd_id] = {"platform_id": platform_id, "msg": msg,
                                 "attempts": 0, "timer": None}
        self.events.append({"t_ns": self.loop.now_ns, "kind": "command_submitted",
                            "cmd_id": cmd_id, "platform": platform_id, "command": command})
        self._transmit(cmd_id)

    def _transmit(self, cmd_id: int) -> None:
        pending = self._pending[cmd_id]
        spec = self._specs[pending["platform_id"]]
        pending["attempts"] += 1
        with self._lock:
            self.tickets[cmd_id]["transmissions"] = pending["attempts"]
        self.link.send(spec.modem_addr, encode_app_message(pending["msg"]))
        self.frames_sent += 1
        self.pump()
        timeout_ns = round(spec.ack_timeout_s * _NS)
        pending["timer"] = self.loop.schedule_in(timeout_ns, lambda c=cmd_id: self._on_timeout(c))

    def _on_timeout(self, cmd_id: int) -> None:
        pending = self._pending.get(cmd_id)
        if pending is None:
            return
        spec = self._specs[pending["platform_id"]]
        if pending["attempts"] <= spec.retry_count:
            self._transmit(cmd_id)
            return
        del self._pending[cmd_id]
        with self._lock:
            self.tickets[cmd_id]["state"] = "failed"
            self.tickets[cmd_id]["resolved_t_ns"] = self.loop.now_ns
        self.events.append({"t_ns": self.loop.now_ns, "kind": "command_exhausted",
                            "cmd_id": cmd_id})

    # -- event broadcast

    def broadcast_event(self, event_code: int, new_interval_s: int) -> None:
        repeats = self.config.vessel_retry_count + 1
        self.events.append({"t_ns": self.loop.now_ns, "kind": "storm_broadcast"
                            if event_code == EVENT_STORM_PREDICTED else "event_broadcast",
                            "event_code": event_code,
                            "new_sampling_interval_s": new_interval_s,
                            "repeats": repeats})
        msg = EventMsg(event_code, new_interval_s)
        for _ in range(repeats):
            self.link.send(BROADCAST, encode_app_message(msg))
            self.frames_sent += 1
            self.pump()

    # -- inbound traffic

    def pump(self) -> None:
        for src, payload in self.link.collect():
            platform_id = self._by_addr.get(src)
            if platform_id is None:
                continue
            try:
                msg = decode_app_message(payload)
            except ValueError:
                self.decode_failures += 1
                continue
            self.handle_message(platform_id, msg)

    def handle_message(self, platform_id: str, msg: AppMessage) -> None:
        now = self.loop.now_ns
        with self._lock:
            self.twin_status[platform_id]["last_contact_t_ns"] = now
        if isinstance(msg, DataMsg):
            self._ingest_data(platform_id, msg)
        elif isinstance(msg, AckStatusMsg):
            self._ingest_ack(platform_id, msg)
        # commands/events are vessel-originated; ignore if echoed back

    def _ingest_data(self, platform_id: str, msg: DataMsg) -> None:
        if msg.schema_id not in self.registry:
            self.decode_failures += 1
            return
        topic = f"{platform_id}/o2"
        key = ("dt-" + platform_id, topic)
        seq = self._seq.get(key, 0)
        self._seq[key] = seq + 1
        env = Envelope(topic, "dt-" + platform_id, seq, self.loop.now_ns,
                       msg.schema_id, msg.body)
        self.bus.publish(env)
        self.shadows[platform_id].record(env)
        self.data_received[platform_id] += 1
        schema = self.registry.get(msg.schema_id)
        value = decode_binary(schema, msg.body)
        names = [f[0] for f in schema.fields]
        o2 = value.values[names.index("o2_umol_per_l")] if "o2_umol_per_l" in names else None
        if o2 is not None:
            with self._lock:
                self.timeseries[platform_id].append((env.t_ns, o2))

    def _ingest_ack(self, platform_id: str, msg: AckStatusMsg) -> None:
        pending = self._pending.pop(msg.cmd_id, None)
        if pending is None:
            return  # stale or duplicate ack
        if pending["timer"] is not None:
            pending["timer"].cancel()
        with self._lock:
            self.tickets[msg.cmd_id]["state"] = "acked" if msg.status == STATUS_OK else "failed"
            self.tickets[msg.cmd_id]["resolved_t_ns"] = self.loop.now_ns
            self.twin_status[platform_id]["battery_pct"] = msg.battery_pct_x10 / 10.0
            self.twin_status[platform_id]["sampling_interval_s"] = msg.sampling_interval_s
        self.events.append({"t_ns": self.loop.now_ns, "kind": "command_acked",
                            "cmd_id": msg.cmd_id})

    # -- thread-safe snapshots for the admin shells

    def ticket_snapshot(self, cmd_id: int) -> dict | None:
        with self._lock:
            t = self.tickets.get(cmd_id)
            return dict(t) if t else None

    def status_snapshot(self, platform_id: str) -> dict | None:
        with self._lock:
            s = self.twin_status.get(platform_id)
            return dict(s) if s else None

    def timeseries_snapshot(self, platform_id: str) -> list[tuple[int, float]]:
        with self._lock:
            return list(self.timeseries.get(platform_id, ()))

    def close(self) -> None:
        for writer in self.shadows.values():
            writer.close()


# --- the runner ---------------------------------------------------------------

def build_schema_registry() -> SchemaRegistry:
    registry = SchemaRegistry()
    registry.register(parse_schema(OXYGEN_SCHEMA_TEXT, OXYGEN_SCHEMA_ID, name="oxygen_data"))
    return registry


class Simulation:
    """A fully wired scenario: event loop, medium, platforms, vessel."""

    def __init__(self, config: SimConfig, out_dir):
        config.validate()
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

        self.loop = EventLoop()
        medium_cfg = replace(config.medium, seed=config.medium.seed or config.seed)
        self.medium = AcousticMedium(medium_cfg, self.loop)
        self.registry = build_schema_registry()
        pairs = VirtualPairRegistry()

        self.vessel = VesselNode(config, self.loop, self.medium, self.registry,
                                 pairs, self.out_dir)
        self.platforms = [
            PlatformNode(spec, self.loop, self.medium, self.registry, pairs,
                         config.vessel_addr, self.out_dir / f"{spec.platform_id}.shadow",
                         detect_low_o2=(config.scenario == "d"))
            for spec in config.platforms
        ]
        self._end_ns = round(config.duration_s * _NS)
        self._schedule_script()

    def _schedule_script(self) -> None:
        for node in self.platforms:
            node.schedule_first_sample(self._end_ns)
        if self.config.scenario == "b":
            for cmd in self.config.commands:
                self.loop.schedule_at(
                    round(cmd.t_s * _NS),
                    lambda c=cmd: self.vessel.submit_command(c.platform_id, c.command, c.interval_s))
        if self.config.scenario == "c":
            ev = self.config.external_event
            if ev is None:
                raise ConfigError("scenario c needs an external_event")
            self.loop.schedule_at(
                round(ev.t_s * _NS),
                lambda: self.vessel.broadcast_event(ev.event_code, ev.new_sampling_interval_s))

    def run(self) -> dict:
        """Drain the event queue (timers stop at duration_s; in-flight traffic
        and retries complete past it) and assemble the report."""
        self.loop.run_all(between=self.vessel.drain_operator_queue)
        report = self._report()
        for node in self.platforms:
            node.close()
        self.vessel.close()
        return report

    def _report(self) -> dict:
        platforms = {}
        for node in self.platforms:
            link = (node.spec.modem_addr, self.config.vessel_addr)
            platforms[node.spec.platform_id] = {
                "samples": node.lcu.state.samples_taken,
                "frames_sent": node.frames_sent,
                "frames_received": node.frames_received,
                "frames_dropped": sum(
                    n for (src, _d), n in self.medium.dropped.items()
                    if src == node.spec.modem_addr),
                "decode_failures": node.decode_failures,
                "final_sampling_interval_s": node.interval_s,
                "battery_pct": round(node.lcu.state.battery_pct, 3),
            }
        links = {}
        for key in sorted(self.medium.sent):
            src, dest = key
            links[f"{src}->{dest}"] = {
                "sent": self.medium.sent.get(key, 0),
                "delivered": self.medium.delivered.get(key, 0),
                "dropped": self.medium.dropped.get(key, 0),
            }
        events = sorted(
            [e for node in self.platforms for e in node.events] + self.vessel.events,
            key=lambda e: e["t_ns"])
        with self.vessel._lock:
            acked = sum(1 for t in self.vessel.tickets.values() if t["state"] == "acked")
            failed = sum(1 for t in self.vessel.tickets.values() if t["state"] == "failed")
        return {
            "scenario": self.config.scenario,
            "seed": self.config.seed,
            "duration_s": self.config.duration_s,
            "virtual_end_t_ns": self.loop.now_ns,
            "platforms": platforms,
            "vessel": {
                "data_received": dict(self.vessel.data_received),
                "commands_acked": acked,
                "commands_failed": failed,
                "frames_sent": self.vessel.frames_sent,
            },
            "events": events,
            "links": links,
            "shadow_logs": sorted(p.name for p in self.out_dir.glob("*.shadow")),
        }


def run_scenario(config: SimConfig, out_dir) -> dict:
    """Execute one scenario to completion; returns the report dict and leaves
    the shadow logs in out_dir."""
    return Simulation(config, out_dir).run()
