"""Scenario configuration files: INI-style key/value text with dotted section
names for nesting. See docs/config-format.md for the full schema.

    [sim]
    seed = 42
    duration_s = 3600
    scenario = a
    vessel_addr = 1

    [medium]
    rate_bytes_per_s = 64
    sound_speed_m_per_s = 1500
    loss_prob = 0.0

    [distances]             # unordered address pairs, meters
    1-2 = 1000

    [platform.bigo-1]
    modem_addr = 2
    sampling_interval_s = 600
    baseline_umol_per_l = 280
    ...

    [scenario.b]
    command.1 = 100:bigo-1:set_sampling_interval:600

    [scenario.c]
    t_s = 100
    event = storm_predicted
    new_sampling_interval_s = 300
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .emulators import OptodeModel
from .medium import MediumConfig
from .scenarios import (
    EVENT_NAMES,
    ConfigError,
    ExternalEvent,
    PlatformSpec,
    ScriptedCommand,
    SimConfig,
)


def load_sim_config(path) -> SimConfig:
    """Parse a scenario config file; raises ConfigError on any problem."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return _build(parser)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _build(parser: configparser.ConfigParser) -> SimConfig:
    if "sim" not in parser:
        raise ConfigError("missing [sim] section")
    sim = parser["sim"]

    distances = {}
    if "distances" in parser:
        for key, value in parser["distances"].items():
            a, _, b = key.partition("-")
            pa, pb = int(a), int(b)
            distances[(min(pa, pb), max(pa, pb))] = float(value)

    med = parser["medium"] if "medium" in parser else {}
    medium = MediumConfig(
        rate_bytes_per_s=int(med.get("rate_bytes_per_s", 64)),
        sound_speed_m_per_s=float(med.get("sound_speed_m_per_s", 1500.0)),
        distances_m=distances,
        loss_prob=float(med.get("loss_prob", 0.0)),
        seed=int(med.get("seed", 0)),
    )

    platforms = []
    for section in parser.sections():
        if not section.startswith("platform."):
            continue
        pid = section[len("platform."):]
        p = parser[section]
        optode = OptodeModel(
            baseline_umol_per_l=float(p.get("baseline_umol_per_l", 280.0)),
            amplitude_umol_per_l=float(p.get("amplitude_umol_per_l", 0.0)),
            period_s=float(p.get("period_s", 86400.0)),
            noise_std_umol_per_l=float(p.get("noise_std_umol_per_l", 0.0)),
            seed=int(p.get("optode_seed", 0)),
        )
        platforms.append(PlatformSpec(
            platform_id=pid,
            modem_addr=int(p["modem_addr"]),
            optode=optode,
            sampling_interval_s=int(p.get("sampling_interval_s", 600)),
            o2_threshold_umol_per_l=float(p.get("o2_threshold_umol_per_l", "-inf")),
            retry_count=int(p.get("retry_count", 2)),
            ack_timeout_s=float(p.get("ack_timeout_s", 30.0)),
            mode=p.get("mode", "emulated"),
            shadow_replay=p.get("shadow_replay") or None,
        ))

    scenario = sim.get("scenario", "a")
    commands = []
    if "scenario.b" in parser:
        for key in sorted(parser["scenario.b"]):
            if not key.startswith("command"):
                continue
            commands.append(_parse_command(parser["scenario.b"][key]))
    external_event = None
    if "scenario.c" in parser:
        c = parser["scenario.c"]
        event_name = c.get("event", "storm_predicted")
        if event_name not in EVENT_NAMES:
            raise ConfigError(f"unknown event {event_name!r}")
        external_event = ExternalEvent(
            t_s=float(c.get("t_s", 0.0)),
            event_code=EVENT_NAMES[event_name],
            new_sampling_interval_s=int(c.get("new_sampling_interval_s", 300)),
        )

    config = SimConfig(
        seed=int(sim.get("seed", 0)),
        duration_s=float(sim["duration_s"]),
        medium=medium,
        platforms=tuple(platforms),
        vessel_addr=int(sim.get("vessel_addr", 1)),
        scenario=scenario,
        commands=tuple(commands),
        external_event=external_event,
        vessel_retry_count=int(sim.get("vessel_retry_count", 2)),
    )
    config.validate()
    return config


def _parse_command(text: str) -> ScriptedCommand:
    """`<t_s>:<platform_id>:<command>[:<interval_s>]`"""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"bad command line {text!r}")
    t_s, platform_id, command = float(parts[0]), parts[1], parts[2]
    interval = int(parts[3]) if len(parts) == 4 else 0
    return ScriptedCommand(t_s=t_s, platform_id=platform_id,
                           command=command, interval_s=interval)
