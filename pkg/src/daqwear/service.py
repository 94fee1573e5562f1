"""Background measurement service: state machine and virtual-clock event loop.

The service waits for control messages. A restart (re)loads the uploaded
configuration and opens a fresh session; a clean wipes every measurement
file; nothing else can stop a running measurement short of shutting the
device down. Sensor readouts and writer ticks are events on a virtual
millisecond clock, so runs are deterministic and far faster than real time.
Apply messages and advance the clock from one context at a time; callers
that serve multiple clients (the bridge) serialize around the runtime.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import os
import shutil
import sys
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum

from . import __version__
from .config import enabled_intervals, parse_config
from .geofence import GpsFix, PrivacyCircle, fresh_fix, label as privacy_label
from .recorder import Recorder, StorageError
from .sensorsim import Scenario, battery_percent

log = logging.getLogger("daqwear.service")

DEFAULT_BOOT_TIME = datetime(2022, 6, 1, 9, 30, 0)

UPLOAD_DIR = "upload"
UPLOAD_CONFIG_NAME = "config.txt"
DATA_DIR = "data"


class DeviceState(Enum):
    BOOTED_IDLE = "BootedIdle"
    MEASURING = "Measuring"
    DEGRADED = "Degraded"
    SHUT_DOWN = "ShutDown"


@dataclass(frozen=True)
class Restart:
    person_id: int


@dataclass(frozen=True)
class Clean:
    pass


ACTION_CLOSE_SESSION = "close_session"
ACTION_RELOAD_CONFIG = "reload_config"
ACTION_OPEN_SESSION = "open_session"
ACTION_DELETE_ALL = "delete_all"

_RUNNING = (DeviceState.MEASURING, DeviceState.DEGRADED)


def handle(state: DeviceState, msg):
    """Pure transition function: (state, message) -> (state, action names).

    Unknown or malformed messages change nothing; errors never surface here
    (non-blocking by design). A restart while measuring rotates the session,
    which also re-reads the uploaded configuration.
    """
    if state is DeviceState.SHUT_DOWN:
        return state, []
    if isinstance(msg, Restart) and isinstance(msg.person_id, int) and 0 <= msg.person_id <= 999:
        if state in _RUNNING:
            return DeviceState.MEASURING, [ACTION_CLOSE_SESSION, ACTION_RELOAD_CONFIG, ACTION_OPEN_SESSION]
        return DeviceState.MEASURING, [ACTION_RELOAD_CONFIG, ACTION_OPEN_SESSION]
    if isinstance(msg, Clean):
        if state in _RUNNING:
            return DeviceState.BOOTED_IDLE, [ACTION_CLOSE_SESSION, ACTION_DELETE_ALL]
        return DeviceState.BOOTED_IDLE, [ACTION_DELETE_ALL]
    return state, []


_EVT_READOUT = 0  # readouts before the tick that would persist them
_EVT_TICK = 1


class DeviceRuntime:
    """The virtual device: clock, sensors, recorder, and control handling."""

    def __init__(self, home, scenario: Scenario, boot_time: datetime = DEFAULT_BOOT_TIME,
                 package_version: str = __version__, open_fn=open):
        self.home = home
        self.scenario = scenario
        self.boot_time = boot_time
        self.package_version = package_version
        self._open_fn = open_fn
        self.now_ms = 0
        self.state = DeviceState.BOOTED_IDLE
        self.person_id = None
        self.session = None
        self._session_index = 0
        self._session_streams = {}
        self._latest_fix = None
        self._last_session_start = None
        self._events = []
        self._tie = itertools.count()
        os.makedirs(self.upload_dir, exist_ok=True)
        os.makedirs(self.data_root, exist_ok=True)
        self.config, report = self._read_upload()
        if not report.clean():
            log.debug("boot config corrected: %d entries", len(report.entries))

    # --- paths and clock ---

    @property
    def upload_dir(self):
        return os.path.join(self.home, UPLOAD_DIR)

    @property
    def upload_config_path(self):
        return os.path.join(self.upload_dir, UPLOAD_CONFIG_NAME)

    @property
    def data_root(self):
        return os.path.join(self.home, DATA_DIR)

    def wall_time(self, t_ms=None) -> datetime:
        if t_ms is None:
            t_ms = self.now_ms
        return self.boot_time + timedelta(milliseconds=int(t_ms))

    # --- control ---

    def post(self, msg, at_ms=None):
        """Apply one control message, optionally advancing the clock first."""
        if at_ms is not None:
            self.advance_to(at_ms)
        if self.state is DeviceState.SHUT_DOWN:
            return
        new_state, actions = handle(self.state, msg)
        if new_state is self.state and not actions:
            log.debug("ignored message %r in %s", msg, self.state.value)
            return
        log.debug("t=%dms %s + %r -> %s %s", self.now_ms, self.state.value, msg, new_state.value, actions)
        self.state = new_state
        for action in actions:
            if action == ACTION_CLOSE_SESSION:
                self._close_session()
            elif action == ACTION_RELOAD_CONFIG:
                self._reload_config()
            elif action == ACTION_OPEN_SESSION:
                self._open_session(msg.person_id)
            elif action == ACTION_DELETE_ALL:
                self._delete_all()

    def shutdown(self):
        """Flush and close everything; only a new runtime can record again."""
        self._close_session()
        self._events.clear()
        self.state = DeviceState.SHUT_DOWN
        log.debug("shut down at t=%dms", self.now_ms)

    # --- clock / events ---

    def advance_to(self, target_ms):
        """Process every due event and move the clock to target_ms."""
        target_ms = int(target_ms)
        if target_ms < self.now_ms:
            raise ValueError("virtual clock cannot run backwards")
        while self._events and self._events[0][0] <= target_ms:
            t, _, _, payload = heapq.heappop(self._events)
            self.now_ms = t
            self._dispatch(payload)
        self.now_ms = target_ms

    def run_schedule(self, messages, until_ms):
        """Drive the clock to until_ms with control messages at their times,
        then shut down."""
        for at_ms, msg in sorted(messages, key=lambda m: m[0]):
            self.post(msg, at_ms=at_ms)
        self.advance_to(until_ms)
        self.shutdown()

    def _schedule(self, t_ms, prio, payload):
        heapq.heappush(self._events, (int(t_ms), prio, next(self._tie), payload))

    def _dispatch(self, payload):
        if payload[1] != self._session_index or self.session is None:
            return  # event of a closed session
        if payload[0] == "readout":
            self._on_readout(payload[2], payload[3])
        else:
            self._on_tick()

    def _on_readout(self, kind, k):
        stream = self._session_streams[kind]
        sample = stream.sample(k)
        if sample is not None:
            self.session.offer(sample)
            if kind == "gps":
                self._latest_fix = GpsFix(sample.values[0], sample.values[1], float(self.now_ms))
        self._schedule(self.now_ms + stream.interval_ms, _EVT_READOUT,
                       ("readout", self._session_index, kind, k + 1))

    def _on_tick(self):
        try:
            self.session.tick(self.now_ms, self._current_label())
            if self.state is DeviceState.DEGRADED:
                log.debug("storage recovered at t=%dms", self.now_ms)
                self.state = DeviceState.MEASURING
        except StorageError as exc:
            if self.state is not DeviceState.DEGRADED:
                log.debug("storage failure at t=%dms: %s", self.now_ms, exc)
                self.state = DeviceState.DEGRADED
        self._schedule(self.now_ms + self.config.write_interval_ms, _EVT_TICK,
                       ("tick", self._session_index))

    def _current_label(self) -> str:
        circle = PrivacyCircle(self.config.privacy_lat_deg, self.config.privacy_lon_deg,
                               self.config.privacy_radius_m)
        fix = fresh_fix(self._latest_fix, self.now_ms, self.config.gps_interval_s)
        return privacy_label(fix, circle)

    # --- session lifecycle ---

    def _read_upload(self):
        try:
            with open(self.upload_config_path, "rb") as fh:
                text = fh.read()
        except OSError:
            text = b""
        return parse_config(text)

    def _reload_config(self):
        self.config, report = self._read_upload()
        for entry in report.entries:
            log.debug("config corrected: %s %r -> %r (%s)", entry.field_name,
                      entry.raw_text, entry.corrected_value, entry.reason)

    def _open_session(self, person_id):
        self._session_index += 1
        self.person_id = int(person_id)
        start = self.wall_time().replace(microsecond=0)
        if self._last_session_start is not None and start <= self._last_session_start:
            # two restarts within one second would collide on filenames
            start = self._last_session_start + timedelta(seconds=1)
        self._last_session_start = start
        data_dir = os.path.join(self.data_root, self.config.watch_id)
        try:
            self.session = Recorder(data_dir, self.config, self.person_id, start,
                                    self.now_ms, self.package_version, open_fn=self._open_fn)
        except StorageError as exc:
            log.debug("cannot open session: %s", exc)
            self.session = None
            self.state = DeviceState.DEGRADED
            return
        self._session_streams = {}
        for kind, interval_ms in enabled_intervals(self.config).items():
            stream = self.scenario.stream(kind, interval_ms, start_ms=self.now_ms,
                                          session=self._session_index)
            self._session_streams[kind] = stream
            self._schedule(self.now_ms + interval_ms, _EVT_READOUT,
                           ("readout", self._session_index, kind, 1))
        self._schedule(self.now_ms + self.config.write_interval_ms, _EVT_TICK,
                       ("tick", self._session_index))
        log.debug("session %d open: person %03d, %d files", self._session_index,
                  self.person_id, len(self.session.files))

    def _close_session(self):
        if self.session is not None:
            self.session.close(now_ms=self.now_ms)
            self.session = None
        self._session_streams = {}
        self._latest_fix = None

    def _delete_all(self):
        try:
            shutil.rmtree(self.data_root)
        except OSError as exc:
            log.debug("clean failed: %s", exc)
        os.makedirs(self.data_root, exist_ok=True)
        log.debug("storage cleaned at t=%dms", self.now_ms)

    # --- introspection ---

    def data_files(self) -> list:
        """Relative paths of every measurement file and metafile on the device."""
        out = []
        for root, _, names in os.walk(self.data_root):
            for name in names:
                out.append(os.path.relpath(os.path.join(root, name), self.data_root))
        return sorted(out)

    def status(self) -> dict:
        files = self.data_files()
        return {
            "state": self.state.value,
            "watch_id": self.config.watch_id,
            "person_id": self.person_id,
            "t_ms": self.now_ms,
            "files": len(files),
            "session": os.path.basename(self.session.metafile_path) if self.session else None,
            "battery_pct": round(float(battery_percent(self.now_ms / 1000.0)), 1),
        }


def run(home, scenario: Scenario, messages, duration_s, boot_time=DEFAULT_BOOT_TIME,
        package_version=__version__) -> DeviceRuntime:
    """Boot a device, drive it with a message schedule, and shut it down."""
    runtime = DeviceRuntime(home, scenario, boot_time=boot_time, package_version=package_version)
    runtime.run_schedule(messages, int(duration_s * 1000))
    return runtime


def configure_logging(debug: bool):
    """Release builds emit nothing at all; debug builds log flow to stderr."""
    logger = logging.getLogger("daqwear")
    logger.handlers.clear()
    logger.propagate = False
    if debug:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        logger.addHandler(handler)
        logger.setLevel(logging.DEBUG)
    else:
        logger.addHandler(logging.NullHandler())
        logger.setLevel(logging.CRITICAL)
