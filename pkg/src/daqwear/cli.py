"""Researcher command line: preparation, logistics, analysis, simulation.

Exit codes: 0 success, 1 partial or device failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys

from . import __version__
from .config import DEFAULT_CONFIG_TEXT, parse_config
from .sensorsim import SCENARIO_NAMES, load_scenario
from .service import DeviceRuntime, Restart, configure_logging

MEGABYTE = 1_000_000
STORAGE_BUDGET_BYTES = 500 * MEGABYTE  # what the watch flash holds


def _add_endpoint(parser):
    parser.add_argument("--endpoint", default=None,
                        help="device bridge host:port (default $DAQWEAR_ENDPOINT or 127.0.0.1:7410)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="daqwear", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--debug", action="store_true", help="log program flow to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("push-config", help="upload a configuration file to the device")
    p.add_argument("file")
    _add_endpoint(p)

    p = sub.add_parser("status", help="show device state")
    _add_endpoint(p)

    p = sub.add_parser("restart", help="start or restart a measurement")
    p.add_argument("--person", type=int, required=True, metavar="ID", help="person id, 0-999")
    _add_endpoint(p)

    p = sub.add_parser("clean", help="remove ALL measurements from the device")
    p.add_argument("--force", action="count", default=0,
                   help="required three times, mirroring the triple press on the watch")
    _add_endpoint(p)

    p = sub.add_parser("pull", help="copy device files into a person/session tree")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--scrub", action="store_true", help="also remove private rows from the copy")
    _add_endpoint(p)

    p = sub.add_parser("scrub", help="remove private rows from a pulled tree")
    p.add_argument("--in", dest="in_dir", required=True, metavar="DIR")
    p.add_argument("--out", dest="out_dir", required=True, metavar="DIR")

    p = sub.add_parser("density", help="per-sensor sample density of a file or tree")
    p.add_argument("path")

    p = sub.add_parser("estimate", help="storage estimate for a measurement campaign")
    p.add_argument("--hours", type=float, required=True, help="measurement hours per day")
    p.add_argument("--days", type=float, required=True)
    p.add_argument("--row-bytes", type=float, required=True, help="average bytes per data row")
    p.add_argument("--config", default=None, help="config file (defaults to the built-in settings)")

    p = sub.add_parser("gstats", help="acceleration-magnitude statistics of a motion file")
    p.add_argument("file")

    sim = sub.add_parser("sim", help="virtual device runs")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    p = sim_sub.add_parser("run", help="record one virtual session to disk")
    p.add_argument("--scenario", default="rest",
                   help=f"one of {', '.join(SCENARIO_NAMES)} or a scenario file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, required=True, metavar="SECONDS")
    p.add_argument("--out", default="device", metavar="DIR", help="device home directory")
    p.add_argument("--config", default=None, help="config file to upload before the run")
    p.add_argument("--person", type=int, default=1, help="person id for the session")

    p = sub.add_parser("serve", help="run a virtual device behind the bridge")
    p.add_argument("--home", default="device", metavar="DIR")
    p.add_argument("--scenario", default="rest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="config file to place in the upload folder")
    p.add_argument("--port", type=int, default=7410)
    p.add_argument("--ws-port", type=int, default=7411)
    p.add_argument("--speed", type=float, default=1.0, help="virtual seconds per wall second")
    p.add_argument("--lan", action="store_true",
                   help="bind all interfaces instead of loopback only")
    p.add_argument("--ui", action="store_true", help="also serve the watch-face assets")
    p.add_argument("--ui-dir", default=None)
    p.add_argument("--ui-port", type=int, default=7412)
    return parser


def _client(args):
    from .hosttools import BridgeClient

    return BridgeClient(args.endpoint)


def _write_upload(home, config_path):
    os.makedirs(os.path.join(home, "upload"), exist_ok=True)
    if config_path is None:
        text = DEFAULT_CONFIG_TEXT
    else:
        with open(config_path, "r", encoding="utf-8", errors="replace") as fh:
            text = fh.read()
    with open(os.path.join(home, "upload", "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def cmd_push_config(args) -> int:
    with open(args.file, "r", encoding="utf-8", errors="replace") as fh:
        text = fh.read()
    with _client(args) as client:
        payload = client.push_config(text)
    for c in payload["corrections"]:
        print(f"corrected {c['field']}: {c['raw']!r} -> {c['corrected']!r} ({c['reason']})")
    for key in payload["unknown_keys"]:
        print(f"ignored unknown key: {key}")
    print(f"stored for watch {payload['watch_id']} (applies at the next restart)")
    return 0


def cmd_status(args) -> int:
    with _client(args) as client:
        s = client.status()
    print(f"state={s['state']} watch={s['watch_id']} files={s['files']} "
          f"t_ms={s['t_ms']} battery={s['battery_pct']}%")
    if s.get("session"):
        print(f"session={s['session']} person={s['person_id']:03d}")
    return 0


def cmd_restart(args) -> int:
    if not 0 <= args.person <= 999:
        print("person id must be between 000 and 999", file=sys.stderr)
        return 2
    with _client(args) as client:
        payload = client.restart(args.person)
    print(f"device is now {payload['state']}")
    return 0


def cmd_clean(args) -> int:
    if args.force < 3:
        print("refusing to clean: pass --force three times to remove ALL measurements",
              file=sys.stderr)
        return 2
    with _client(args) as client:
        payload = client.clean()
    print(f"all measurements removed; device is {payload['state']}")
    return 0


def cmd_pull(args) -> int:
    import tempfile

    from .hosttools import pull_all, scrub

    if args.scrub:
        with tempfile.TemporaryDirectory() as staging:
            result = pull_all(staging, endpoint=args.endpoint)
            removed = sum(r.removed for r in scrub(staging, args.out))
            print(f"scrubbed {removed} private rows during the pull")
    else:
        result = pull_all(args.out, endpoint=args.endpoint)
    for rel in result.pulled:
        print(f"pulled {rel}")
    for name, reason in result.failed:
        print(f"FAILED {name}: {reason}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_scrub(args) -> int:
    from .hosttools import scrub

    total_removed = 0
    for r in scrub(args.in_dir, args.out_dir):
        total_removed += r.removed
        print(f"{os.path.relpath(r.path, args.out_dir)}: kept {r.kept}, removed {r.removed}"
              + (f", malformed {r.malformed}" if r.malformed else ""))
    print(f"removed {total_removed} private rows")
    return 0


def cmd_density(args) -> int:
    from .hosttools import density

    skipped = []
    entries = density(args.path, skipped=skipped)
    for path in skipped:
        print(f"skipped (no measurement header): {path}", file=sys.stderr)
    if not entries:
        print("no measurement files found", file=sys.stderr)
        return 1
    for e in entries:
        note = " (intervals from file header)" if e.from_header else ""
        print(f"{os.path.basename(e.path)} {e.kind}: {e.recorded}/{e.expected} "
              f"density={e.density:.3f}{note}")
    return 0


def cmd_estimate(args) -> int:
    from .recorder import estimate_storage

    if args.config is None:
        config, _ = parse_config(DEFAULT_CONFIG_TEXT)
    else:
        with open(args.config, "rb") as fh:
            config, _ = parse_config(fh.read())
    total = estimate_storage(config, args.hours, args.days, args.row_bytes)
    fits = "yes" if total <= STORAGE_BUDGET_BYTES else "no"
    print(f"estimated {total} bytes ({total / MEGABYTE:.1f} MB) "
          f"for {args.days:g} days x {args.hours:g} h at {args.row_bytes:g} B/row")
    print(f"fits in 500 MB: {fits}")
    return 0


def cmd_gstats(args) -> int:
    from .hosttools import gstats

    stats = gstats(args.file)
    if stats is None:
        print("no fresh accelerometer cells in this file", file=sys.stderr)
        return 1
    print(f"mean_G={stats[0]:.4f} m/s^2 std_G={stats[1]:.4f} m/s^2")
    return 0


def tree_digest(root) -> str:
    """Deterministic digest over relative paths and file contents."""
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            path = os.path.join(dirpath, name)
            h.update(os.path.relpath(path, root).encode())
            with open(path, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def cmd_sim_run(args) -> int:
    scenario = load_scenario(args.scenario, seed=args.seed, duration_s=args.duration)
    _write_upload(args.out, args.config)
    runtime = DeviceRuntime(args.out, scenario)
    runtime.run_schedule([(0, Restart(args.person))], int(args.duration * 1000))
    files = runtime.data_files()
    rows = 0
    for rel in files:
        if rel.endswith(".csv"):
            with open(os.path.join(runtime.data_root, rel), "rb") as fh:
                rows += max(0, sum(1 for _ in fh) - 1)
    print(f"recorded {len(files)} files, {rows} data rows under {runtime.data_root}")
    print(f"tree sha256: {tree_digest(runtime.data_root)}")
    return 0


def cmd_serve(args) -> int:
    from .bridge import BridgeServer, serve_ui

    host = "0.0.0.0" if args.lan else "127.0.0.1"
    scenario = load_scenario(args.scenario, seed=args.seed)
    if args.config is not None or not os.path.exists(os.path.join(args.home, "upload", "config.txt")):
        _write_upload(args.home, args.config)
    runtime = DeviceRuntime(args.home, scenario)
    server = BridgeServer(runtime, host=host, port=args.port, ws_port=args.ws_port, pace=args.speed)
    server.start()
    print(f"bridge on {host}:{server.port}, websocket on {host}:{server.ws_port}", flush=True)
    ui_server = None
    if args.ui:
        ui_dir = args.ui_dir or os.path.join(os.getcwd(), "frontend")
        ui_server = serve_ui(ui_dir, host=host, port=args.ui_port)
        import threading

        threading.Thread(target=ui_server.serve_forever, daemon=True).start()
        print(f"watch face on http://{host}:{args.ui_port}/", flush=True)
    try:
        import time

        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
        if ui_server:
            ui_server.shutdown()
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.debug)
    try:
        if args.command == "push-config":
            return cmd_push_config(args)
        if args.command == "status":
            return cmd_status(args)
        if args.command == "restart":
            return cmd_restart(args)
        if args.command == "clean":
            return cmd_clean(args)
        if args.command == "pull":
            return cmd_pull(args)
        if args.command == "scrub":
            return cmd_scrub(args)
        if args.command == "density":
            return cmd_density(args)
        if args.command == "estimate":
            return cmd_estimate(args)
        if args.command == "gstats":
            return cmd_gstats(args)
        if args.command == "sim":
            return cmd_sim_run(args)
        if args.command == "serve":
            return cmd_serve(args)
    except (ConnectionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
