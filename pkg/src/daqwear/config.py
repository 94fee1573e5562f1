"""Measurement configuration: schema, parse-with-correction, metafile, grouping.

Parsing never raises. Every missing, unparsable, or out-of-range field is
silently replaced by its default and the replacement is recorded in a
CorrectionReport, so a measurement can always start no matter how mangled
the uploaded file is. The metafile written next to the data re-uses the
exact same key=value syntax and parses back into the identical Config.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

SENSOR_KINDS = ("accel", "linear_accel", "gyro", "baro", "gps", "battery")

# the battery gauge is not configurable; it is always sampled at 1 Hz
BATTERY_INTERVAL_MS = 1000

REASON_MISSING = "missing"
REASON_OUT_OF_RANGE = "out_of_range"
REASON_UNPARSABLE = "unparsable"

# keys a metafile appends to the config schema; accepted silently on re-parse
# (end_t_ms arrives when the session closes)
_METAFILE_KEYS = ("package_version", "person_id", "start_time", "end_t_ms")

_WATCH_ID_MAX_LEN = 16


@dataclass(frozen=True)
class Config:
    watch_id: str = "0000"
    accel_interval_ms: int = 25
    linear_accel_interval_ms: int = 25
    gyro_interval_ms: int = 25
    baro_interval_ms: int = 100
    gps_interval_s: int = 1
    privacy_lat_deg: float = 52.169311
    privacy_lon_deg: float = 4.456711
    privacy_radius_m: int = 100
    write_interval_s: float = 0.05

    @property
    def write_interval_ms(self) -> int:
        return int(round(self.write_interval_s * 1000))


DEFAULT_CONFIG = Config()


@dataclass(frozen=True)
class Correction:
    field_name: str
    raw_text: str | None
    corrected_value: object
    reason: str


@dataclass
class CorrectionReport:
    """What parse_config had to fix; empty entries means a clean parse."""

    entries: list = field(default_factory=list)
    unknown_keys: list = field(default_factory=list)

    def clean(self) -> bool:
        return not self.entries


@dataclass(frozen=True)
class SensorGroup:
    """Enabled sensors sharing one effective readout interval."""

    interval_ms: int
    members: tuple


@dataclass(frozen=True)
class _Rule:
    name: str
    kind: str  # "int" | "float" | "watch_id"
    lo: float = 0.0
    hi: float = 0.0
    zero_off: bool = False


_RULES = (
    _Rule("watch_id", "watch_id"),
    _Rule("accel_interval_ms", "int", 10, 1000, zero_off=True),
    _Rule("linear_accel_interval_ms", "int", 10, 1000, zero_off=True),
    _Rule("gyro_interval_ms", "int", 10, 1000, zero_off=True),
    _Rule("baro_interval_ms", "int", 10, 1000, zero_off=True),
    _Rule("gps_interval_s", "int", 1, 10, zero_off=True),
    _Rule("privacy_lat_deg", "float", -90.0, 90.0),
    _Rule("privacy_lon_deg", "float", -180.0, 180.0),
    _Rule("privacy_radius_m", "int", 10, 1000, zero_off=True),
    _Rule("write_interval_s", "float", 0.01, 10.0),
)

CONFIG_FIELDS = tuple(rule.name for rule in _RULES)
_RULES_BY_NAME = {rule.name: rule for rule in _RULES}


def _valid_watch_id(token: str) -> bool:
    return 0 < len(token) <= _WATCH_ID_MAX_LEN and token.isascii() and token.isalnum()


def _validate(rule: _Rule, raw: str, default):
    """Return (value, reason) where reason is None for a clean field."""
    if rule.kind == "watch_id":
        if not raw:
            return default, REASON_MISSING
        if _valid_watch_id(raw):
            return raw, None
        return default, REASON_UNPARSABLE
    try:
        value = int(raw) if rule.kind == "int" else float(raw)
    except ValueError:
        return default, REASON_UNPARSABLE
    if rule.zero_off and value == 0:
        return value, None
    if rule.lo <= value <= rule.hi:  # NaN fails every comparison and is replaced
        return value, None
    return default, REASON_OUT_OF_RANGE


def parse_config(text) -> tuple:
    """Parse config-file text into a (Config, CorrectionReport) pair.

    Accepts any bytes or str, including empty or binary garbage; the result
    is always a fully valid Config. Lines are key=value, '#' starts a
    comment, unknown keys are collected but ignored, the last duplicate of
    a key wins.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    raw: dict = {}
    unknown: list = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _RULES_BY_NAME:
            raw[key] = value
        elif key and key not in _METAFILE_KEYS and key not in unknown:
            unknown.append(key)

    report = CorrectionReport(unknown_keys=unknown)
    values = {}
    for rule in _RULES:
        default = getattr(DEFAULT_CONFIG, rule.name)
        if rule.name not in raw:
            values[rule.name] = default
            report.entries.append(Correction(rule.name, None, default, REASON_MISSING))
            continue
        value, reason = _validate(rule, raw[rule.name], default)
        values[rule.name] = value
        if reason is not None:
            report.entries.append(Correction(rule.name, raw[rule.name], value, reason))
    return Config(**values), report


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: Config) -> str:
    """The ten schema fields as key=value lines (the upload-file format)."""
    return "\n".join(f"{name}={_format_value(getattr(config, name))}" for name in CONFIG_FIELDS) + "\n"


def serialize_metafile(config: Config, package_version: str, person_id: int, start) -> str:
    """Session metafile: the corrected settings plus provenance keys.

    Uses the identical key=value syntax as the uploaded config file, so
    parse_config() reads it back into the same Config with a clean report.
    """
    if isinstance(start, datetime):
        start = start.strftime("%Y-%m-%dT%H:%M:%S")
    lines = serialize_config(config)
    lines += f"package_version={package_version}\n"
    lines += f"person_id={int(person_id):03d}\n"
    lines += f"start_time={start}\n"
    return lines


def enabled_intervals(config: Config) -> dict:
    """Effective readout interval in ms for every enabled sensor (0 = off)."""
    out = {}
    if config.accel_interval_ms:
        out["accel"] = config.accel_interval_ms
    if config.linear_accel_interval_ms:
        out["linear_accel"] = config.linear_accel_interval_ms
    if config.gyro_interval_ms:
        out["gyro"] = config.gyro_interval_ms
    if config.baro_interval_ms:
        out["baro"] = config.baro_interval_ms
    if config.gps_interval_s:
        out["gps"] = config.gps_interval_s * 1000
    out["battery"] = BATTERY_INTERVAL_MS
    return out


def sensor_groups(config: Config) -> list:
    """Partition enabled sensors into per-interval groups, one file each.

    Groups come back ordered by ascending interval; members keep the
    canonical accel < linear_accel < gyro < baro < gps < battery order.
    """
    intervals = enabled_intervals(config)
    by_interval: dict = {}
    for kind in SENSOR_KINDS:
        if kind in intervals:
            by_interval.setdefault(intervals[kind], []).append(kind)
    return [SensorGroup(interval, tuple(by_interval[interval])) for interval in sorted(by_interval)]


DEFAULT_CONFIG_TEXT = """\
# watch measurement settings
watch_id=D8F8
accel_interval_ms=25
linear_accel_interval_ms=25
gyro_interval_ms=25
baro_interval_ms=100
gps_interval_s=1
privacy_lat_deg=52.169311
privacy_lon_deg=4.456711
privacy_radius_m=100
write_interval_s=0.05
"""
