"""Administration Shells: an HTTP + JSON service per twin for status, time
series, and command submission, plus a central shell where every twin
registers — the single place from which all platforms are operated.

Status is a snapshot of the vessel-side twin state, never a live acoustic
query; the link cannot support real-time synchronization and the service
does not pretend otherwise.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import asdict, dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .scenarios import COMMAND_NAMES, EVENT_NAMES, Simulation, VesselNode

API = "/api/v1"


class BadRequestError(Exception):
    pass


class UnknownTopicError(Exception):
    pass


class UnknownTicketError(Exception):
    pass


@dataclass
class TwinRegistration:
    twin_id: str
    display_name: str
    base_url: str
    registered_at_ns: int


class CentralShell:
    """Registry of twin Administration Shells; re-registration updates the
    stored base_url rather than growing the list."""

    def __init__(self, vessel: VesselNode | None = None,
                 clock=time.monotonic_ns):
        self._registrations: dict[str, TwinRegistration] = {}
        self._order: list[str] = []
        self._lock = threading.Lock()
        self._clock = clock
        self.vessel = vessel

    def register_twin(self, twin_id: str, display_name: str, base_url: str) -> int:
        if not twin_id or not base_url:
            raise BadRequestError("twin_id and base_url must be non-empty")
        with self._lock:
            if twin_id in self._registrations:
                old = self._registrations[twin_id]
                self._registrations[twin_id] = TwinRegistration(
                    twin_id, display_name or old.display_name, base_url, old.registered_at_ns)
            else:
                self._registrations[twin_id] = TwinRegistration(
                    twin_id, display_name, base_url, self._clock())
                self._order.append(twin_id)
            return self._order.index(twin_id)

    def twins(self) -> list[dict]:
        with self._lock:
            return [asdict(self._registrations[tid]) for tid in self._order]

    def inject_event(self, event_code, new_interval_s: int) -> None:
        if self.vessel is None:
            raise BadRequestError("no running simulation to inject into")
        _inject_event(self.vessel, event_code, new_interval_s)

    # HTTP routing

    def handle(self, method: str, path: str, query: dict, body: dict | None):
        if method == "POST" and path == f"{API}/register":
            body = body or {}
            position = self.register_twin(
                str(body.get("twin_id", "")),
                str(body.get("display_name", "")),
                str(body.get("base_url", "")))
            return 201, {"position": position}
        if method == "GET" and path == f"{API}/twins":
            return 200, self.twins()
        if method == "POST" and path == f"{API}/event":
            body = body or {}
            self.inject_event(body.get("event_code"), int(body.get("new_sampling_interval_s", 0)))
            return 202, {"accepted": True}
        return 404, {"error": f"no route {method} {path}"}


def _inject_event(vessel: VesselNode, event_code, new_interval_s: int) -> None:
    if isinstance(event_code, str):
        if event_code not in EVENT_NAMES:
            raise BadRequestError(f"unknown event code {event_code!r}")
        event_code = EVENT_NAMES[event_code]
    if event_code not in EVENT_NAMES.values():
        raise BadRequestError(f"unknown event code {event_code!r}")
    if not 1 <= new_interval_s <= 0xFFFF:
        raise BadRequestError("new_sampling_interval_s must be 1..65535")
    vessel.enqueue_event(event_code, new_interval_s)


class TwinShell:
    """Administration Shell of one twin, backed by the vessel-side state."""

    def __init__(self, twin_id: str, vessel: VesselNode):
        self.twin_id = twin_id
        self.vessel = vessel
        self._tickets: dict[str, int] = {}  # ticket_id -> cmd_id
        self._lock = threading.Lock()

    def get_status(self) -> dict:
        status = self.vessel.status_snapshot(self.twin_id)
        if status is None:
            raise BadRequestError(f"unknown twin {self.twin_id!r}")
        return status

    def query_timeseries(self, topic: str, from_ns: int, to_ns: int, limit: int) -> list[dict]:
        if topic != f"{self.twin_id}/o2":
            raise UnknownTopicError(topic)
        if from_ns > to_ns:
            raise BadRequestError("from_ns must be <= to_ns")
        if limit < 1:
            raise BadRequestError("limit must be >= 1")
        points = [p for p in self.vessel.timeseries_snapshot(self.twin_id)
                  if from_ns <= p[0] <= to_ns]
        return [{"t_ns": t, "value": v} for t, v in points[:limit]]

    def submit_command(self, command: str, args: dict) -> str:
        if command not in COMMAND_NAMES:
            raise BadRequestError(f"unknown command {command!r}")
        interval = int(args.get("interval_s", 0)) if args else 0
        if command == "set_sampling_interval" and not 1 <= interval <= 0xFFFF:
            raise BadRequestError("interval_s must be 1..65535")
        cmd_id = self.vessel.enqueue_command(self.twin_id, command, interval)
        ticket_id = f"tkt-{self.twin_id}-{cmd_id}"
        with self._lock:
            self._tickets[ticket_id] = cmd_id
        return ticket_id

    def poll_command(self, ticket_id: str) -> dict:
        with self._lock:
            cmd_id = self._tickets.get(ticket_id)
        if cmd_id is None:
            raise UnknownTicketError(ticket_id)
        ticket = self.vessel.ticket_snapshot(cmd_id)
        return {
            "ticket_id": ticket_id,
            "twin_id": self.twin_id,
            "command": ticket["command"],
            "interval_s": ticket["interval_s"],
            "state": ticket["state"],
            "submitted_at_ns": ticket["submitted_t_ns"],
            "resolved_at_ns": ticket["resolved_t_ns"],
            "transmissions": ticket["transmissions"],
        }

    def inject_event(self, event_code, new_interval_s: int) -> None:
        _inject_event(self.vessel, event_code, new_interval_s)

    # HTTP routing

    def handle(self, method: str, path: str, query: dict, body: dict | None):
        if method == "GET" and path == f"{API}/status":
            return 200, self.get_status()
        m = re.match(rf"^{API}/timeseries/(.+)$", path)
        if method == "GET" and m:
            topic = m.group(1)
            from_ns = int(query.get("from_ns", ["0"])[0])
            to_ns = int(query.get("to_ns", [str(2**62)])[0])
            limit = int(query.get("limit", ["100000"])[0])
            return 200, self.query_timeseries(topic, from_ns, to_ns, limit)
        if method == "POST" and path == f"{API}/command":
            body = body or {}
            ticket_id = self.submit_command(str(body.get("command", "")), body.get("args") or {})
            return 202, {"ticket_id": ticket_id}
        m = re.match(rf"^{API}/commands/([^/]+)$", path)
        if method == "GET" and m:
            return 200, self.poll_command(m.group(1))
        if method == "POST" and path == f"{API}/event":
            body = body or {}
            self.inject_event(body.get("event_code"), int(body.get("new_sampling_interval_s", 0)))
            return 202, {"accepted": True}
        return 404, {"error": f"no route {method} {path}"}


class _ShellHandler(BaseHTTPRequestHandler):
    server_version = "OceanDtpShell/0.1"

    def _dispatch(self, method: str):
        parts = urlsplit(self.path)
        body = None
        length = int(self.headers.get("Content-Length") or 0)
        if length:
            try:
                body = json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                self._respond(400, {"error": "request body is not valid JSON"})
                return
        try:
            status, obj = self.server.shell.handle(
                method, parts.path, parse_qs(parts.query), body)
        except BadRequestError as exc:
            status, obj = 400, {"error": str(exc)}
        except UnknownTopicError as exc:
            status, obj = 404, {"error": f"unknown topic: {exc}"}
        except UnknownTicketError as exc:
            status, obj = 404, {"error": f"unknown ticket: {exc}"}
        self._respond(status, obj)

    def _respond(self, status: int, obj) -> None:
        data = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_OPTIONS(self):
        self._respond(204, None)

    def log_message(self, fmt, *args):
        pass  # keep stdout/stderr clean for reports


class ShellServer:
    """One HTTP server bound to a shell, running on its own thread."""

    def __init__(self, shell, host: str = "127.0.0.1", port: int = 0):
        self.httpd = ThreadingHTTPServer((host, port), _ShellHandler)
        self.httpd.daemon_threads = True
        self.httpd.shell = shell
        self.port = self.httpd.server_address[1]
        self._thread = threading.Thread(
            target=lambda: self.httpd.serve_forever(poll_interval=0.05), daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "ShellServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


class PacedRunner:
    """Drives a Simulation's event loop in step with the wall clock so the
    shells serve a live system; operator input drains every tick."""

    def __init__(self, sim: Simulation, tick_s: float = 0.02):
        self.sim = sim
        self.tick_s = tick_s
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self) -> "PacedRunner":
        self._thread.start()
        return self

    def _run(self) -> None:
        wall0 = time.monotonic()
        while not self._stop.is_set():
            self.sim.vessel.drain_operator_queue()
            elapsed_ns = int((time.monotonic() - wall0) * 1e9)
            self.sim.loop.run_until(elapsed_ns)
            time.sleep(self.tick_s)

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5.0)
        # flush shadow logs so interrupted runs leave valid files
        for node in self.sim.platforms:
            node.close()
        self.sim.vessel.close()
