"""Per-frequency CSV measurement files driven by the central write timer.

One session owns one metafile plus one CSV per sensor group. At every
writer tick the recorder holds the latest known sample of each sensor in a
latest-wins mailbox; a group's file gains a row only when at least one
member delivered a new readout since that file's previous row, and a
bitmask column says which cells of the row are fresh. Stale members repeat
their last known values so rows keep a fixed arity.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime

from .config import Config, SensorGroup, enabled_intervals, sensor_groups, serialize_metafile


class StorageError(Exception):
    """A measurement file could not be written; sensors keep running and the
    writer retries the data at its next tick."""


_VALUE_FORMATS = {
    "accel": "%.4f",
    "linear_accel": "%.4f",
    "gyro": "%.4f",
    "baro": "%.2f",
    "gps": "%.6f",
    "battery": "%.1f",
}

_VALUE_COLUMNS = {
    "accel": ("x", "y", "z"),
    "linear_accel": ("x", "y", "z"),
    "gyro": ("x", "y", "z"),
    "baro": ("hpa",),
    "gps": ("lat", "lon"),
    "battery": ("pct",),
}


def kind_token(kind: str) -> str:
    """Sensor kind as it appears in filenames and column names."""
    return kind.replace("_", "")


def group_token(group: SensorGroup) -> str:
    return "-".join(kind_token(k) for k in group.members)


def make_filename(person_id: int, start: datetime, watch_id: str, group: SensorGroup) -> str:
    """P<person>_<YYYYMMDD>_<HHMMSS>_<watch>_<kinds>.csv; lexicographic order
    within one person equals chronological order."""
    return f"P{int(person_id):03d}_{start:%Y%m%d}_{start:%H%M%S}_{watch_id}_{group_token(group)}.csv"


def metafile_filename(person_id: int, start: datetime, watch_id: str) -> str:
    return f"P{int(person_id):03d}_{start:%Y%m%d}_{start:%H%M%S}_{watch_id}_meta.txt"


def group_columns(group: SensorGroup) -> list:
    cols = ["label", "t_ms", "fresh"]
    for kind in group.members:
        tok = kind_token(kind)
        cols.append(f"{tok}_seq")
        cols.append(f"{tok}_time_ms")
        cols.extend(f"{tok}_{axis}" for axis in _VALUE_COLUMNS[kind])
    return cols


def write_header(group, config, package_version, person_id, start, t0_ms=0) -> str:
    """The single metadata line that opens every measurement file."""
    intervals = enabled_intervals(config)
    parts = [
        f"person={int(person_id):03d}",
        f"date={start:%Y%m%d}",
        f"time={start:%H%M%S}",
        f"watch={config.watch_id}",
        f"kinds={group_token(group)}",
        f"version={package_version}",
        f"write_ms={config.write_interval_ms}",
        "intervals_ms=" + ",".join(str(intervals[k]) for k in group.members),
        f"t0_ms={int(t0_ms)}",
        "columns=" + ",".join(group_columns(group)),
    ]
    return "# " + " ".join(parts)


def parse_header(line: str) -> dict:
    """Header line back into a dict; columns and intervals come back split."""
    if not line.startswith("#"):
        raise ValueError("not a measurement-file header")
    out = {}
    for token in line[1:].split():
        key, _, value = token.partition("=")
        out[key] = value
    out["columns"] = out.get("columns", "").split(",")
    out["intervals_ms"] = [int(v) for v in out.get("intervals_ms", "").split(",") if v]
    out["kinds"] = out.get("kinds", "").split("-")
    out["write_ms"] = int(out.get("write_ms", 0))
    out["t0_ms"] = int(out.get("t0_ms", 0))
    return out


@dataclass
class MeasurementFile:
    path: str
    group: SensorGroup
    header_line: str
    rows_written: int = 0
    bytes_written: int = 0
    last_t_ms: int = -1
    last_seq: dict = field(default_factory=dict)
    handle: object = None


class Recorder:
    """One measurement session: open files, mailbox, and the write timer."""

    def __init__(self, data_dir, config: Config, person_id: int, start: datetime, t0_ms: int,
                 package_version: str, open_fn=open):
        self.config = config
        self.person_id = int(person_id)
        self.start = start
        self.t0_ms = int(t0_ms)
        self.data_dir = data_dir
        self._latest: dict = {}
        os.makedirs(data_dir, exist_ok=True)
        try:
            self.metafile_path = os.path.join(data_dir, metafile_filename(person_id, start, config.watch_id))
            with open_fn(self.metafile_path, "w") as fh:
                fh.write(serialize_metafile(config, package_version, person_id, start))
            self.files = []
            for group in sensor_groups(config):
                path = os.path.join(data_dir, make_filename(person_id, start, config.watch_id, group))
                header = write_header(group, config, package_version, person_id, start, t0_ms)
                handle = open_fn(path, "w")
                handle.write(header + "\n")
                handle.flush()
                self.files.append(
                    MeasurementFile(path=path, group=group, header_line=header,
                                    bytes_written=len(header) + 1, handle=handle)
                )
        except OSError as exc:
            self._abort_open()
            raise StorageError(f"cannot open session files: {exc}") from exc

    def _abort_open(self):
        for mf in getattr(self, "files", []):
            if mf.handle is not None:
                try:
                    mf.handle.close()
                except OSError:
                    pass

    def offer(self, sample):
        """Latest-wins mailbox: readouts faster than the writer overwrite."""
        self._latest[sample.kind] = sample

    def latest(self, kind):
        return self._latest.get(kind)

    def _format_row(self, mf: MeasurementFile, now_ms: int, label: str, fresh_bits: int) -> str:
        cells = [label, str(int(now_ms)), str(fresh_bits)]
        for kind in mf.group.members:
            s = self._latest.get(kind)
            if s is None:
                cells.extend([""] * (2 + len(_VALUE_COLUMNS[kind])))
                continue
            fmt = _VALUE_FORMATS[kind]
            cells.append(str(s.seq))
            cells.append("%.3f" % s.sensor_time_ms)
            cells.extend(fmt % v for v in s.values)
        return ",".join(cells) + "\n"

    def tick(self, now_ms: int, label: str) -> int:
        """One pass of the write timer; returns the number of rows written.

        Raises StorageError if any file failed, after trying all of them;
        a failed file's freshness bookkeeping is untouched, so the same
        sensors are still fresh at the next tick (the retry path).
        """
        rows = 0
        failures = []
        for mf in self.files:
            fresh_bits = 0
            for i, kind in enumerate(mf.group.members):
                s = self._latest.get(kind)
                if s is not None and s.seq > mf.last_seq.get(kind, -1):
                    fresh_bits |= 1 << i
            if not fresh_bits:
                continue
            line = self._format_row(mf, now_ms, label, fresh_bits)
            try:
                mf.handle.write(line)
            except OSError as exc:
                failures.append(f"{os.path.basename(mf.path)}: {exc}")
                continue
            mf.rows_written += 1
            mf.bytes_written += len(line)
            mf.last_t_ms = int(now_ms)
            for kind in mf.group.members:
                s = self._latest.get(kind)
                if s is not None:
                    mf.last_seq[kind] = s.seq
            rows += 1
            try:
                # keep the on-disk file whole-line complete so concurrent
                # pulls of an active session never see a torn row
                mf.handle.flush()
            except OSError as exc:
                failures.append(f"{os.path.basename(mf.path)}: {exc}")
        if failures:
            raise StorageError("; ".join(failures))
        return rows

    def file_paths(self) -> list:
        return [self.metafile_path] + [mf.path for mf in self.files]

    def close(self, now_ms=None):
        """Flush and close every file; data written so far survives.

        When the close time is known it is appended to the metafile, giving
        analysis a session span that does not depend on which rows survive
        later post-processing.
        """
        for mf in self.files:
            if mf.handle is None:
                continue
            try:
                mf.handle.flush()
                mf.handle.close()
            except OSError:
                pass
            mf.handle = None
        if now_ms is not None:
            try:
                with open(self.metafile_path, "a") as fh:
                    fh.write(f"end_t_ms={int(now_ms)}\n")
            except OSError:
                pass


def estimate_storage(config: Config, hours_per_day: float, days: float, bytes_per_row: float):
    """Campaign storage estimate: rows per configured sensor group times row size.

    Pure arithmetic over the configured readout rates. The fixed-rate battery
    housekeeping group is excluded (it is not part of the configured schema
    and contributes about 2% at default rates).
    """
    if hours_per_day < 0 or days < 0 or bytes_per_row < 0:
        raise ValueError("durations and row size must be non-negative")
    duration_s = hours_per_day * 3600.0 * days
    total = 0.0
    for group in sensor_groups(config):
        if group.members == ("battery",):
            continue
        total += (duration_s * 1000.0 / group.interval_ms) * bytes_per_row
    return int(round(total))
