"""Admin shell behavior, both direct and over an in-process HTTP server."""

import json
import time
import urllib.error
import urllib.request

import pytest

from conftest import make_config
from oceandtp.adminshell import (
    BadRequestError,
    CentralShell,
    PacedRunner,
    ShellServer,
    TwinShell,
    UnknownTicketError,
    UnknownTopicError,
)
from oceandtp.scenarios import PlatformSpec, ScriptedCommand, Simulation


def http_get(url):
    with urllib.request.urlopen(url, timeout=5) as resp:
        return resp.status, json.loads(resp.read())


def http_post(url, obj):
    req = urllib.request.Request(
        url, json.dumps(obj).encode(), {"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=5) as resp:
        return resp.status, json.loads(resp.read())


class TestCentralShell:
    def test_register_then_list(self):
        central = CentralShell()
        assert central.register_twin("bigo-1", "BIGO Lander 1", "http://h:1") == 0
        assert [t["twin_id"] for t in central.twins()] == ["bigo-1"]

    def test_reregistration_updates_url(self):
        central = CentralShell()
        central.register_twin("bigo-1", "BIGO", "http://h:1")
        central.register_twin("bigo-1", "BIGO", "http://h:2")
        twins = central.twins()
        assert len(twins) == 1
        assert twins[0]["base_url"] == "http://h:2"

    def test_empty_twin_id_rejected(self):
        with pytest.raises(BadRequestError):
            CentralShell().register_twin("", "x", "http://h:1")

    def test_over_http(self):
        server = ShellServer(CentralShell()).start()
        try:
            status, body = http_post(f"{server.base_url}/api/v1/register",
                                     {"twin_id": "t1", "display_name": "T", "base_url": "http://x"})
            assert status == 201
            status, twins = http_get(f"{server.base_url}/api/v1/twins")
            assert status == 200 and twins[0]["twin_id"] == "t1"
        finally:
            server.stop()

    def test_bad_request_over_http(self):
        server = ShellServer(CentralShell()).start()
        try:
            with pytest.raises(urllib.error.HTTPError) as exc:
                http_post(f"{server.base_url}/api/v1/register", {"twin_id": ""})
            assert exc.value.code == 400
        finally:
            server.stop()


@pytest.fixture
def live_sim(tmp_path):
    """A scenario-b simulation run to completion, with its vessel state
    available to shells (no pacing: virtual time already elapsed)."""
    cfg = make_config(scenario="b", duration_s=1200.0, commands=(
        ScriptedCommand(100.0, "p1", "set_sampling_interval", 300),))
    sim = Simulation(cfg, tmp_path / "out")
    sim.loop.run_all(between=sim.vessel.drain_operator_queue)
    return sim


class TestTwinShell:
    def test_status_reflects_ack(self, live_sim):
        shell = TwinShell("p1", live_sim.vessel)
        status = shell.get_status()
        assert status["sampling_interval_s"] == 300
        assert status["battery_pct"] is not None
        assert status["last_contact_t_ns"] is not None

    def test_fresh_twin_has_no_contact(self, tmp_path):
        sim = Simulation(make_config(), tmp_path / "out")
        shell = TwinShell("p1", sim.vessel)
        assert shell.get_status()["last_contact_t_ns"] is None

    def test_timeseries_window_and_limit(self, live_sim):
        shell = TwinShell("p1", live_sim.vessel)
        points = shell.query_timeseries("p1/o2", 0, 2**62, 100)
        assert len(points) >= 2
        assert points == sorted(points, key=lambda p: p["t_ns"])
        first = shell.query_timeseries("p1/o2", 0, 2**62, 1)
        assert first == points[:1]
        empty = shell.query_timeseries("p1/o2", 1, 2, 10)
        assert empty == []

    def test_unknown_topic(self, live_sim):
        shell = TwinShell("p1", live_sim.vessel)
        with pytest.raises(UnknownTopicError):
            shell.query_timeseries("p1/temperature", 0, 10, 1)

    def test_bad_range_rejected(self, live_sim):
        shell = TwinShell("p1", live_sim.vessel)
        with pytest.raises(BadRequestError):
            shell.query_timeseries("p1/o2", 10, 0, 1)
        with pytest.raises(BadRequestError):
            shell.query_timeseries("p1/o2", 0, 10, 0)

    def test_poll_unknown_ticket(self, live_sim):
        with pytest.raises(UnknownTicketError):
            TwinShell("p1", live_sim.vessel).poll_command("tkt-nope")

    def test_submit_validates_command(self, live_sim):
        shell = TwinShell("p1", live_sim.vessel)
        with pytest.raises(BadRequestError):
            shell.submit_command("reboot", {})
        with pytest.raises(BadRequestError):
            shell.submit_command("set_sampling_interval", {"interval_s": 0})

    def test_inject_event_validates_code(self, live_sim):
        shell = TwinShell("p1", live_sim.vessel)
        with pytest.raises(BadRequestError):
            shell.inject_event(99, 300)
        shell.inject_event("storm_predicted", 300)
        shell.inject_event(1, 300)


class TestLiveFlow:
    def test_command_and_event_through_paced_runner(self, tmp_path):
        cfg = make_config(duration_s=900.0, platforms=(
            PlatformSpec("p1", 2, sampling_interval_s=600),))
        sim = Simulation(cfg, tmp_path / "out")
        runner = PacedRunner(sim, tick_s=0.005)
        shell = TwinShell("p1", sim.vessel)
        runner.start()
        try:
            ticket_id = shell.submit_command("set_sampling_interval", {"interval_s": 450})
            deadline = time.monotonic() + 10
            while time.monotonic() < deadline:
                ticket = shell.poll_command(ticket_id)
                if ticket["state"] != "pending":
                    break
                time.sleep(0.02)
            assert ticket["state"] == "acked"
            assert shell.get_status()["sampling_interval_s"] == 450
            # events are fire-and-forget; watch the platform itself reconfigure
            shell.inject_event("storm_predicted", 120)
            deadline = time.monotonic() + 10
            while time.monotonic() < deadline:
                if sim.platforms[0].interval_s == 120:
                    break
                time.sleep(0.02)
        finally:
            runner.stop()
        assert sim.platforms[0].interval_s == 120

    def test_http_flow_against_twin_shell(self, live_sim):
        server = ShellServer(TwinShell("p1", live_sim.vessel)).start()
        try:
            status, body = http_get(f"{server.base_url}/api/v1/status")
            assert status == 200 and body["twin_id"] == "p1"
            status, points = http_get(
                f"{server.base_url}/api/v1/timeseries/p1/o2?from_ns=0&limit=3")
            assert status == 200 and len(points) <= 3
            with pytest.raises(urllib.error.HTTPError) as exc:
                http_get(f"{server.base_url}/api/v1/timeseries/p1/nope")
            assert exc.value.code == 404
            with pytest.raises(urllib.error.HTTPError) as exc:
                http_get(f"{server.base_url}/api/v1/commands/tkt-unknown")
            assert exc.value.code == 404
        finally:
            server.stop()
