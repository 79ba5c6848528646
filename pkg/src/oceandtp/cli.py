"""Command-line entry points: headless scenario runs, shadow replay, schema
tooling, and serving the Administration Shells.

Reports go to stdout, diagnostics to stderr; exit code 2 signals bad
configuration or input, matching argparse's own usage failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import signal
import sys
import threading
from pathlib import Path

from . import adminshell
from .bus import Bus
from .config import load_sim_config
from .msgschema import SchemaError, decode_binary, encode_binary, encode_json, message_value, parse_schema
from .scenarios import ConfigError, run_scenario
from .shadow import CorruptLogError, read_shadow_log, replay


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CorruptLogError as exc:
        print(f"shadow log error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oceandtp",
        description="Digital twin prototyping for underwater acoustic sensor networks")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_run = sub.add_parser("run", help="execute a scenario headless")
    p_run.add_argument("--config", required=True, help="scenario config file")
    p_run.add_argument("--scenario", choices=["a", "b", "c", "d"],
                       help="override the config's scenario")
    p_run.add_argument("--seed", type=int, help="override the config's seed")
    p_run.add_argument("--out", default="dtp-out", help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_replay = sub.add_parser("replay", help="republish a recorded shadow log")
    p_replay.add_argument("--shadow", required=True, help="shadow log file")
    p_replay.add_argument("--speed", default="max",
                          help="replay speed factor, or 'max' for no pacing")
    p_replay.set_defaults(func=_cmd_replay)

    p_schema = sub.add_parser("schema", help="schema tooling")
    p_schema.add_argument("action", choices=["check", "encode", "decode"])
    p_schema.add_argument("--schema", required=True, help="schema text file")
    p_schema.add_argument("--schema-id", type=int, default=1)
    p_schema.add_argument("--value", help="JSON value text (encode)")
    p_schema.add_argument("--hex", dest="hex_data", help="hex-encoded binary (decode)")
    p_schema.set_defaults(func=_cmd_schema)

    p_serve = sub.add_parser("serve", help="run the simulation behind admin shells")
    p_serve.add_argument("--config", required=True, help="scenario config file")
    p_serve.add_argument("--central-port", type=int, default=8000)
    p_serve.add_argument("--twin-port-base", type=int, default=8100)
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def _cmd_run(args) -> int:
    config = load_sim_config(args.config)
    if args.scenario:
        config = dataclasses.replace(config, scenario=args.scenario)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    config.validate()
    out_dir = Path(args.out)
    report = run_scenario(config, out_dir)
    text = json.dumps(report, indent=2, sort_keys=True)
    (out_dir / "report.json").write_text(text + "\n")
    print(text)
    return 0


def _cmd_replay(args) -> int:
    if args.speed == "max":
        speed = None
    else:
        try:
            speed = float(args.speed)
        except ValueError:
            print(f"bad --speed {args.speed!r}", file=sys.stderr)
            return 2
        if speed <= 0:
            print("--speed must be > 0", file=sys.stderr)
            return 2
    records = read_shadow_log(args.shadow)
    bus = Bus()
    count = replay(records, bus.publish, speed=speed)
    print(count)
    return 0


def _cmd_schema(args) -> int:
    path = Path(args.schema)
    if not path.is_file():
        print(f"schema file not found: {path}", file=sys.stderr)
        return 2
    schema = parse_schema(path.read_text(), args.schema_id, name=path.stem)

    if args.action == "check":
        for fname, ftype in schema.fields:
            print(f"{ftype}\t{fname}")
        return 0

    if args.action == "encode":
        if args.value is None:
            print("encode requires --value", file=sys.stderr)
            return 2
        try:
            obj = json.loads(args.value)
        except ValueError as exc:
            print(f"bad JSON value: {exc}", file=sys.stderr)
            return 2
        if not isinstance(obj, dict):
            print("value must be a JSON object keyed by field name", file=sys.stderr)
            return 2
        try:
            values = [_coerce(obj[fname], ftype) for fname, ftype in schema.fields]
        except KeyError as exc:
            print(f"value missing field {exc}", file=sys.stderr)
            return 2
        try:
            print(encode_binary(schema, message_value(schema.schema_id, values)).hex())
        except ValueError as exc:
            print(f"encode error: {exc}", file=sys.stderr)
            return 2
        return 0

    # decode
    if args.hex_data is None:
        print("decode requires --hex", file=sys.stderr)
        return 2
    try:
        data = bytes.fromhex(args.hex_data)
    except ValueError:
        print("bad hex input", file=sys.stderr)
        return 2
    try:
        value = decode_binary(schema, data)
    except ValueError as exc:
        print(f"decode error: {exc}", file=sys.stderr)
        return 2
    print(encode_json(schema, value))
    return 0


def _coerce(v, ftype):
    # JSON has no int/float distinction we can rely on for float fields
    if not ftype.is_array and ftype.base in ("float32", "float64") and isinstance(v, int):
        return float(v)
    return v


def _cmd_serve(args) -> int:
    config = load_sim_config(args.config)
    out_dir = Path("dtp-serve-out")
    try:
        handle = start_serve(config, args.central_port, args.twin_port_base, out_dir)
    except OSError as exc:
        print(f"cannot bind: {exc}", file=sys.stderr)
        return 2
    print(f"central shell: {handle.central_server.base_url}", file=sys.stderr)
    for pid, server in handle.twin_servers.items():
        print(f"twin {pid}: {server.base_url}", file=sys.stderr)
    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda _sig, _frame: stop.set())
    signal.signal(signal.SIGTERM, lambda _sig, _frame: stop.set())
    try:
        while not stop.wait(0.2):
            pass
    finally:
        handle.stop()
    return 0


class ServeHandle:
    def __init__(self, runner, central_server, twin_servers):
        self.runner = runner
        self.central_server = central_server
        self.twin_servers = twin_servers

    def stop(self) -> None:
        self.runner.stop()
        for server in self.twin_servers.values():
            server.stop()
        self.central_server.stop()


def start_serve(config, central_port: int, twin_port_base: int, out_dir) -> ServeHandle:
    """Start the central shell, one twin shell per platform, and the paced
    simulation; twins register with the central shell immediately."""
    from .scenarios import Simulation

    sim = Simulation(config, out_dir)
    central = adminshell.CentralShell(vessel=sim.vessel)
    central_server = adminshell.ShellServer(central, port=central_port).start()
    twin_servers = {}
    try:
        for i, spec in enumerate(config.platforms):
            shell = adminshell.TwinShell(spec.platform_id, sim.vessel)
            port = twin_port_base + i if twin_port_base else 0  # 0 = ephemeral per twin
            server = adminshell.ShellServer(shell, port=port).start()
            twin_servers[spec.platform_id] = server
            central.register_twin(spec.platform_id, spec.platform_id, server.base_url)
    except OSError:
        for server in twin_servers.values():
            server.stop()
        central_server.stop()
        raise
    runner = adminshell.PacedRunner(sim).start()
    return ServeHandle(runner, central_server, twin_servers)


if __name__ == "__main__":
    sys.exit(main())
