import os

import pytest

from oceandtp.channel import (
    ByteChannel,
    ChannelConfig,
    DeviceUnavailableError,
    LoopbackChannel,
    NameInUseError,
    VirtualPairRegistry,
    open_channel,
)
from oceandtp.emulators import LcuEmulator, LcuState, OptodeModel


class TestVirtualPair:
    def test_bytes_cross_to_peer(self):
        a, b = VirtualPairRegistry().create_pair("x")
        a.write(b"\x61\x62\x63")
        assert b.read() == b"abc"

    def test_fifo_order(self):
        a, b = VirtualPairRegistry().create_pair("x")
        a.write(b"\x01")
        a.write(b"\x02")
        assert b.read() == b"\x01\x02"

    def test_read_respects_max(self):
        a, b = VirtualPairRegistry().create_pair("x")
        a.write(b"abcdef")
        assert b.read(2) == b"ab"
        assert b.read() == b"cdef"

    def test_full_duplex(self):
        a, b = VirtualPairRegistry().create_pair("x")
        a.write(b"ping")
        b.write(b"pong")
        assert b.read() == b"ping"
        assert a.read() == b"pong"

    def test_name_in_use(self):
        reg = VirtualPairRegistry()
        reg.create_pair("x")
        with pytest.raises(NameInUseError):
            reg.create_pair("x")

    def test_empty_read_when_idle(self):
        a, b = VirtualPairRegistry().create_pair("x")
        assert b.read() == b""


class TestOpenChannel:
    def test_env_override_forces_virtual(self):
        reg = VirtualPairRegistry()
        cfg = ChannelConfig(mode="real", address="/dev/definitely-absent")
        ch = open_channel(cfg, env={"DTP_EMULATED": "1"}, registry=reg)
        peer = reg.open("/dev/definitely-absent")
        ch.write(b"hi")
        assert peer.read() == b"hi"

    def test_env_zero_keeps_configured_mode(self):
        cfg = ChannelConfig(mode="loopback")
        ch = open_channel(cfg, env={"DTP_EMULATED": "0"})
        assert isinstance(ch, LoopbackChannel)

    def test_loopback_reads_own_writes(self):
        ch = open_channel(ChannelConfig(mode="loopback"), env={})
        ch.write(b"echo")
        assert ch.read() == b"echo"

    def test_real_device_unavailable(self):
        cfg = ChannelConfig(mode="real", address="/dev/definitely-absent")
        with pytest.raises(DeviceUnavailableError):
            open_channel(cfg, env={})

    def test_open_twice_connects_both_parties(self):
        reg = VirtualPairRegistry()
        cfg = ChannelConfig(mode="virtual", address="pair-1")
        a = open_channel(cfg, env={}, registry=reg)
        b = open_channel(cfg, env={}, registry=reg)
        a.write(b"x")
        assert b.read() == b"x"
        with pytest.raises(NameInUseError):
            open_channel(cfg, env={}, registry=reg)

    def test_real_mode_over_pty(self):
        master, slave = os.openpty()
        try:
            path = os.ttyname(slave)
            ch = open_channel(ChannelConfig(mode="real", address=path), env={})
            ch.write(b"hello")
            assert os.read(master, 100) == b"hello"
            os.write(master, b"back")
            assert ch.read() == b"back"
            ch.close()
        finally:
            os.close(master)
            os.close(slave)

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            ChannelConfig(mode="weird")

    def test_virtual_requires_address(self):
        with pytest.raises(ValueError):
            ChannelConfig(mode="virtual")


class _ComposedChannel(ByteChannel):
    """Two loopbacks glued into a duplex link: write to one, read the other."""

    def __init__(self, read_side, write_side):
        self._read_side = read_side
        self._write_side = write_side

    def write(self, data):
        return self._write_side.write(data)

    def read(self, max_bytes=65536):
        return self._read_side.read(max_bytes)


SCRIPT = [b"$STATUS\r\n", b"$GETO2\r\n", b"$SAMPLE,600\r\n", b"$STATUS\r\n", b"$FOO\r\n"]


def _run_lcu_transcript(client, device):
    lcu = LcuEmulator(device, LcuState(battery_pct=87.5, sampling_interval_s=3600,
                                       optode=OptodeModel(baseline_umol_per_l=280.0)))
    transcript = []
    for command in SCRIPT:
        client.write(command)
        transcript.append(("tx", command))
        lcu.pump()
        transcript.append(("rx", client.read()))
    return transcript


def test_substitutability_virtual_vs_loopback_composition():
    # same protocol exchange, two different channel backings, identical bytes
    client_v, device_v = VirtualPairRegistry().create_pair("lcu")
    over_virtual = _run_lcu_transcript(client_v, device_v)

    to_device, to_client = LoopbackChannel(), LoopbackChannel()
    client_l = _ComposedChannel(read_side=to_client, write_side=to_device)
    device_l = _ComposedChannel(read_side=to_device, write_side=to_client)
    over_loopback = _run_lcu_transcript(client_l, device_l)

    assert over_virtual == over_loopback
    assert over_virtual[1] == ("rx", b"!STATUS,OK,87.5,3600\r\n")
