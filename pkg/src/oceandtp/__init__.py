"""oceandtp: digital twin prototyping for underwater acoustic sensor networks.

Byte-exact device emulators behind switchable virtual/real serial channels, a
schema-based pub/sub layer with a compact binary codec, a 64-byte/s acoustic
medium on a deterministic discrete-event clock, digital-shadow record/replay,
and per-twin Administration Shell services with a central registry.
"""

__version__ = "0.1.0"

from .bus import Bus, Envelope, transport_frame, transport_unframe
from .channel import ChannelConfig, create_virtual_pair, open_channel
from .emulators import LcuEmulator, LcuState, ModemEmulator, OptodeModel, optode_sample
from .medium import AcousticMedium, Frame, MediumConfig
from .msgschema import (
    MessageSchema,
    MessageValue,
    SchemaRegistry,
    decode_binary,
    encode_binary,
    encode_json,
    message_value,
    parse_schema,
)
from .scenarios import PlatformSpec, SimConfig, run_scenario
from .shadow import ShadowLogWriter, read_shadow_log, replay

__all__ = [
    "AcousticMedium",
    "Bus",
    "ChannelConfig",
    "Envelope",
    "Frame",
    "LcuEmulator",
    "LcuState",
    "MediumConfig",
    "MessageSchema",
    "MessageValue",
    "ModemEmulator",
    "OptodeModel",
    "PlatformSpec",
    "SchemaRegistry",
    "ShadowLogWriter",
    "SimConfig",
    "create_virtual_pair",
    "decode_binary",
    "encode_binary",
    "encode_json",
    "message_value",
    "open_channel",
    "optode_sample",
    "parse_schema",
    "read_shadow_log",
    "replay",
    "run_scenario",
    "transport_frame",
    "transport_unframe",
]
