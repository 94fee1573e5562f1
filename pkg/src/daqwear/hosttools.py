"""Host-side logistics: pull files into a person/session tree, scrub private
rows, and compute recording-quality statistics.

Everything here operates on the bridge protocol or on pulled trees; nothing
touches device internals.
"""

from __future__ import annotations

import base64
import json
import math
import os
import re
import shutil
import socket
from dataclasses import dataclass, field

import numpy as np

from .bridge import DEFAULT_PORT, ENDPOINT_ENV
from .geofence import LABEL_OUTSIDE, PRIVACY_LABELS
from .recorder import parse_header
from .sensorsim import METERS_PER_HPA

SESSION_FILE_RE = re.compile(r"^P(\d{3})_(\d{8})_(\d{6})_([0-9A-Za-z]+)_(.+)$")


def altitude(delta_p_hpa: float) -> float:
    """Height change in meters for a pressure change in hPa (7.75 m per hPa,
    pressure dropping as altitude rises)."""
    return -METERS_PER_HPA * delta_p_hpa


class BridgeClient:
    """One NDJSON connection to a device bridge."""

    def __init__(self, endpoint=None, timeout=10.0):
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV) or f"127.0.0.1:{DEFAULT_PORT}"
        host, _, port = endpoint.rpartition(":")
        self._sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout=timeout)
        self._rfile = self._sock.makefile("rb")

    def close(self):
        try:
            self._rfile.close()
            self._sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def request(self, **obj) -> dict:
        self._sock.sendall(json.dumps(obj).encode("utf-8") + b"\n")
        line = self._rfile.readline()
        if not line:
            raise ConnectionError("bridge closed the connection")
        return json.loads(line)

    def status(self) -> dict:
        return self._expect(self.request(op="STATUS"))

    def list_files(self) -> list:
        return self._expect(self.request(op="LIST_FILES"))["files"]

    def pull_file(self, name: str) -> bytes:
        payload = self._expect(self.request(op="PULL_FILE", name=name))
        return base64.b64decode(payload["content_b64"])

    def push_config(self, text: str) -> dict:
        return self._expect(self.request(op="PUSH_CONFIG", text=text))

    def restart(self, person_id: int) -> dict:
        return self._expect(self.request(op="SEND", message={"type": "RESTART", "person_id": person_id}))

    def clean(self) -> dict:
        return self._expect(self.request(op="SEND", message={"type": "CLEAN"}))

    @staticmethod
    def _expect(response: dict):
        if not response.get("ok"):
            raise RuntimeError(f"bridge refused: {response.get('reason')}")
        return response.get("payload")


@dataclass
class PullResult:
    pulled: list = field(default_factory=list)
    failed: list = field(default_factory=list)  # (name, reason)

    @property
    def ok(self):
        return not self.failed


def session_dir_for(name: str):
    """out-tree location of a device file: P<person>/<YYYYMMDD_HHMMSS>/."""
    m = SESSION_FILE_RE.match(name)
    if not m:
        return None
    return os.path.join(f"P{m.group(1)}", f"{m.group(2)}_{m.group(3)}")


def pull_all(out_dir, endpoint=None, client=None) -> PullResult:
    """Copy every device file under out_dir, sorted by person then date-time.

    Copies are byte-identical and idempotent; a file being written lands
    with a .part suffix until it is complete, so no torn file ever carries
    a final name.
    """
    own = client is None
    if own:
        client = BridgeClient(endpoint)
    result = PullResult()
    try:
        for entry in sorted(client.list_files(), key=lambda e: e["name"]):
            name = entry["name"]
            rel = session_dir_for(name)
            if rel is None:
                result.failed.append((name, "unrecognized_name"))
                continue
            try:
                content = client.pull_file(name)
            except (RuntimeError, ConnectionError, OSError) as exc:
                result.failed.append((name, str(exc)))
                continue
            dest_dir = os.path.join(out_dir, rel)
            os.makedirs(dest_dir, exist_ok=True)
            dest = os.path.join(dest_dir, name)
            part = dest + ".part"
            with open(part, "wb") as fh:
                fh.write(content)
            os.replace(part, dest)
            result.pulled.append(os.path.join(rel, name))
    finally:
        if own:
            client.close()
    return result


@dataclass
class ScrubFileResult:
    path: str
    kept: int
    removed: int
    malformed: int


def scrub_file(in_path, out_path) -> ScrubFileResult:
    """Copy one measurement file, dropping rows labeled outside the public
    area. Malformed rows are retained untouched and counted, never silently
    discarded."""
    kept = removed = malformed = 0
    with open(in_path, "r", encoding="utf-8", newline="") as src, \
            open(out_path, "w", encoding="utf-8", newline="") as dst:
        header = src.readline()
        dst.write(header)
        try:
            ncols = len(parse_header(header.rstrip("\n"))["columns"])
        except ValueError:
            ncols = None
        for line in src:
            fields = line.rstrip("\n").split(",")
            well_formed = fields and fields[0] in PRIVACY_LABELS and (ncols is None or len(fields) == ncols)
            if not well_formed:
                malformed += 1
                dst.write(line)
                continue
            if fields[0] == LABEL_OUTSIDE:
                removed += 1
                continue
            kept += 1
            dst.write(line)
    return ScrubFileResult(out_path, kept, removed, malformed)


def scrub(in_tree, out_tree) -> list:
    """Scrub every measurement CSV under in_tree into out_tree; metafiles and
    anything else copy over verbatim. Scrubbing twice changes nothing."""
    results = []
    for root, _, names in os.walk(in_tree):
        for name in sorted(names):
            src = os.path.join(root, name)
            rel = os.path.relpath(src, in_tree)
            dst = os.path.join(out_tree, rel)
            os.makedirs(os.path.dirname(dst), exist_ok=True)
            if name.endswith(".csv"):
                results.append(scrub_file(src, dst))
            else:
                shutil.copyfile(src, dst)
    return results


@dataclass
class DensityEntry:
    path: str
    kind: str
    recorded: int
    expected: int
    density: float
    from_header: bool = False  # intervals read from the file header, no metafile


def _find_metafile(csv_path):
    name = os.path.basename(csv_path)
    m = SESSION_FILE_RE.match(name)
    if not m:
        return None
    meta = f"P{m.group(1)}_{m.group(2)}_{m.group(3)}_{m.group(4)}_meta.txt"
    path = os.path.join(os.path.dirname(csv_path), meta)
    return path if os.path.exists(path) else None


def _session_facts_from_metafile(meta_path, kinds):
    """(intervals, write_ms, end_t_ms) per the session metafile, or Nones."""
    from .config import enabled_intervals, parse_config

    with open(meta_path, "rb") as fh:
        raw = fh.read()
    config, _ = parse_config(raw)
    end_t_ms = None
    for line in raw.decode("utf-8", errors="replace").splitlines():
        key, _, value = line.partition("=")
        if key.strip() == "end_t_ms":
            try:
                end_t_ms = int(value.strip())
            except ValueError:
                pass
    table = enabled_intervals(config)
    if all(k.replace("_", "") in {x.replace("_", "") for x in table} for k in kinds):
        by_token = {k.replace("_", ""): v for k, v in table.items()}
        return [by_token[k] for k in kinds], config.write_interval_ms, end_t_ms
    return None, None, end_t_ms


def density_file(csv_path) -> list:
    """Per-sensor sample density of one measurement file.

    recorded counts only fresh cells (the bitmask column); expected is the
    session span divided by the sensor's effective recording interval, which
    is the slower of its readout interval and the write timer. The span comes
    from the metafile's session-close marker when available (scrub-proof);
    only a still-open session falls back to the last row's time stamp.
    Raises ValueError when the file does not open with a measurement header.
    """
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = parse_header(fh.readline().rstrip("\n"))
        kinds = header["kinds"]
        intervals = header["intervals_ms"]
        write_ms = header["write_ms"]
        end_t = None
        from_header = True
        meta = _find_metafile(csv_path)
        if meta:
            meta_intervals, meta_write, end_t = _session_facts_from_metafile(meta, kinds)
            if meta_intervals:
                intervals, write_ms, from_header = meta_intervals, meta_write, False
        fresh_counts = [0] * len(kinds)
        last_t = None
        for line in fh:
            fields = line.rstrip("\n").split(",")
            if len(fields) < 3:
                continue
            try:
                t = int(fields[1])
                bits = int(fields[2])
            except ValueError:
                continue
            last_t = t
            for i in range(len(kinds)):
                if bits & (1 << i):
                    fresh_counts[i] += 1
    entries = []
    span_end = end_t if end_t is not None else last_t
    for i, kind in enumerate(kinds):
        effective = max(intervals[i], write_ms)
        duration = 0 if span_end is None else span_end - header["t0_ms"]
        expected = int(duration // effective) if effective else 0
        dens = (fresh_counts[i] / expected) if expected else math.nan
        entries.append(DensityEntry(csv_path, kind, fresh_counts[i], expected, dens, from_header))
    return entries


def density(path, skipped=None) -> list:
    """DensityEntry list for one file or every CSV under a tree.

    Files without a parseable measurement header are skipped; pass a list as
    skipped to collect their paths instead of losing them silently.
    """
    paths = [path] if os.path.isfile(path) else [
        os.path.join(root, name)
        for root, _, names in os.walk(path)
        for name in sorted(names) if name.endswith(".csv")
    ]
    entries = []
    for csv_path in paths:
        try:
            entries.extend(density_file(csv_path))
        except ValueError:
            if skipped is not None:
                skipped.append(csv_path)
    return entries


def gstats(csv_path):
    """(mean, std) of the acceleration magnitude over fresh accelerometer
    cells, or None when the file has none (or is not a measurement file)."""
    with open(csv_path, "r", encoding="utf-8") as fh:
        try:
            header = parse_header(fh.readline().rstrip("\n"))
        except ValueError:
            return None
        kinds = header["kinds"]
        if "accel" not in kinds:
            return None
        member = kinds.index("accel")
        columns = header["columns"]
        ix = columns.index("accel_x")
        rows = []
        for line in fh:
            fields = line.rstrip("\n").split(",")
            if len(fields) != len(columns):
                continue
            try:
                bits = int(fields[2])
            except ValueError:
                continue
            if not bits & (1 << member):
                continue
            try:
                rows.append((float(fields[ix]), float(fields[ix + 1]), float(fields[ix + 2])))
            except ValueError:
                continue
    if not rows:
        return None
    v = np.asarray(rows)
    g = np.sqrt((v * v).sum(axis=1))
    return float(g.mean()), float(g.std())
