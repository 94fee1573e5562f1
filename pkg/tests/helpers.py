"""Shared test utilities: device-home setup, CSV parsing, tree digests."""

import hashlib
import os

DEFAULTS = {
    "watch_id": "D8F8",
    "accel_interval_ms": 25,
    "linear_accel_interval_ms": 25,
    "gyro_interval_ms": 25,
    "baro_interval_ms": 100,
    "gps_interval_s": 1,
    "privacy_lat_deg": 52.169311,
    "privacy_lon_deg": 4.456711,
    "privacy_radius_m": 100,
    "write_interval_s": 0.05,
}


def config_text(**overrides) -> str:
    values = dict(DEFAULTS)
    values.update(overrides)
    return "\n".join(f"{k}={v}" for k, v in values.items()) + "\n"


def make_home(root, text) -> str:
    home = os.path.join(str(root), "device")
    os.makedirs(os.path.join(home, "upload"), exist_ok=True)
    with open(os.path.join(home, "upload", "config.txt"), "w") as fh:
        fh.write(text)
    return home


def read_measurement(path):
    """(header dict, rows) where each row maps column name to its string cell."""
    from daqwear.recorder import parse_header

    with open(path, "r", encoding="utf-8") as fh:
        header = parse_header(fh.readline().rstrip("\n"))
        columns = header["columns"]
        rows = []
        for line in fh:
            cells = line.rstrip("\n").split(",")
            rows.append(dict(zip(columns, cells)))
    return header, rows


def fresh_cells(header, rows, kind):
    """Rows of one sensor where its freshness bit is set."""
    member = header["kinds"].index(kind.replace("_", ""))
    return [r for r in rows if int(r["fresh"]) & (1 << member)]


def tree_digest(root) -> str:
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            path = os.path.join(dirpath, name)
            h.update(os.path.relpath(path, root).encode())
            with open(path, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def find_file(root, fragment):
    hits = []
    for dirpath, _, names in os.walk(root):
        for name in names:
            if fragment in name:
                hits.append(os.path.join(dirpath, name))
    return sorted(hits)
