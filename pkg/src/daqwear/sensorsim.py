"""Deterministic simulated sensor sources.

Each sensor stream reproduces the pathologies of real watch hardware: a
per-sensor clock bias on the reported timestamps, gaussian sampling jitter,
and readouts that vanish entirely with a configured probability. Streams
are seeded per (scenario seed, session, sensor, purpose), so identical
scenarios replay bit-identically while sensors stay statistically
independent of each other.

Four scenario shapes cover the validation set: resting flat (gravity plus
calibrated noise), a decelerating flat spin, a walk that leaves the privacy
circle, and a climb with matching pressure drop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SENSOR_KINDS
from .geofence import GpsFix
from .kernels import EARTH_RADIUS_M, lowpass_gravity, spin_motion

METERS_PER_HPA = 7.75  # sea-level pressure-to-height slope at 10 degrees C
BASE_PRESSURE_HPA = 1013.25
BATTERY_LIFE_S = 12 * 3600.0  # a full charge drains in 12 h of measuring
GRAVITY_ALPHA_PER_25MS = 0.9  # low-pass pole of the gravity estimate, per 25 ms step

VALUE_ARITY = {"accel": 3, "linear_accel": 3, "gyro": 3, "baro": 1, "gps": 2, "battery": 1}

DEFAULT_BIAS_MS = {
    "accel": 3.0,
    "linear_accel": 5.0,
    "gyro": 7.0,
    "baro": -4.0,
    "gps": 12.0,
    "battery": 0.0,
}

DEFAULT_INTERVALS_MS = {
    "accel": 25,
    "linear_accel": 25,
    "gyro": 25,
    "baro": 100,
    "gps": 1000,
    "battery": 1000,
}

SCENARIO_NAMES = ("rest", "spin", "walk", "climb")

_KIND_INDEX = {kind: i for i, kind in enumerate(SENSOR_KINDS)}
_MIN_CHUNK = 4096


@dataclass
class Sample:
    """One sensor readout; sensor_time_ms is the sensor's own biased stamp."""

    kind: str
    seq: int
    sensor_time_ms: float
    values: tuple


@dataclass
class Scenario:
    name: str = "rest"
    duration_s: float = 60.0
    seed: int = 0
    # timestamp pathology
    bias_ms: dict = field(default_factory=lambda: dict(DEFAULT_BIAS_MS))
    jitter_std_ms: float = 2.0
    drop_probability: float = 0.05
    # gravity / motion noise
    gravity: float = 9.81
    noise_std: float = 0.03  # accelerometer, per axis, m/s^2
    gyro_noise_std_dps: float = 0.05
    tilt_deg: float = 0.0
    azimuth_deg: float = 0.0
    # spin
    omega0_dps: float = 360.0
    tau_s: float = 10.0
    r_m: float = 0.02
    # pressure
    base_pressure_hpa: float = BASE_PRESSURE_HPA
    pressure_noise_std_hpa: float = 0.01
    # track
    origin_lat_deg: float = 52.169311
    origin_lon_deg: float = 4.456711
    walk_speed_mps: float = 20.0
    walk_bearing_deg: float = 0.0
    climb_m: float = 31.0
    climb_hold_s: float = 5.0
    waypoints: tuple = None  # ((t_s, lat_deg, lon_deg, alt_m), ...)

    _streams: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario name: {self.name!r}")
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if self.jitter_std_ms < 0:
            raise ValueError("jitter std must be non-negative")
        if not 0.0 <= self.drop_probability < 1.0:
            raise ValueError("drop probability must be in [0, 1)")
        if self.waypoints is None:
            self.waypoints = default_track(self)

    def stream(self, kind, interval_ms, start_ms=0, session=0):
        """The (cached) deterministic sample stream for one sensor."""
        key = (kind, int(interval_ms), int(start_ms), int(session))
        st = self._streams.get(key)
        if st is None:
            st = self._streams[key] = SampleStream(self, kind, interval_ms, start_ms, session)
        return st


def gravity_vector(gravity, tilt_deg, azimuth_deg=0.0):
    """Gravity reading of a watch tilted away from flat by tilt_deg."""
    t = math.radians(tilt_deg)
    a = math.radians(azimuth_deg)
    return np.array(
        [gravity * math.sin(t) * math.cos(a), gravity * math.sin(t) * math.sin(a), gravity * math.cos(t)]
    )


def destination_point(lat_deg, lon_deg, bearing_deg, dist_m):
    """Point dist_m away along a bearing; flat-earth offsets on the 6371 km sphere."""
    brg = math.radians(bearing_deg)
    dlat = dist_m * math.cos(brg) / EARTH_RADIUS_M
    dlon = dist_m * math.sin(brg) / (EARTH_RADIUS_M * math.cos(math.radians(lat_deg)))
    return lat_deg + math.degrees(dlat), lon_deg + math.degrees(dlon)


def default_track(scenario):
    """Built-in waypoint track per scenario shape.

    walk: straight line from the origin at walk_speed_mps, so the default
    100 m circle is crossed at radius/speed seconds. climb: hold altitude
    for climb_hold_s at both ends with a linear ramp between.
    """
    o = (scenario.origin_lat_deg, scenario.origin_lon_deg)
    if scenario.name == "walk":
        end = destination_point(o[0], o[1], scenario.walk_bearing_deg, scenario.walk_speed_mps * scenario.duration_s)
        return ((0.0, o[0], o[1], 0.0), (scenario.duration_s, end[0], end[1], 0.0))
    if scenario.name == "climb":
        hold = min(scenario.climb_hold_s, scenario.duration_s / 2.0)
        return (
            (0.0, o[0], o[1], 0.0),
            (hold, o[0], o[1], 0.0),
            (scenario.duration_s - hold, o[0], o[1], scenario.climb_m),
            (scenario.duration_s, o[0], o[1], scenario.climb_m),
        )
    return ((0.0, o[0], o[1], 0.0),)


def track_point(scenario, t_s):
    """(lat, lon, alt) along the scenario track, linearly interpolated."""
    t = np.asarray(t_s, dtype=np.float64)
    wp = np.asarray(scenario.waypoints, dtype=np.float64)
    lat = np.interp(t, wp[:, 0], wp[:, 1])
    lon = np.interp(t, wp[:, 0], wp[:, 2])
    alt = np.interp(t, wp[:, 0], wp[:, 3])
    return lat, lon, alt


def pressure_from_altitude(alt_m, base_hpa=BASE_PRESSURE_HPA):
    return base_hpa - np.asarray(alt_m, dtype=np.float64) / METERS_PER_HPA


def battery_percent(t_s):
    return np.maximum(0.0, 100.0 - np.asarray(t_s, dtype=np.float64) * (100.0 / BATTERY_LIFE_S))


class SampleStream:
    """Seeded readout stream of one sensor within one session.

    Readout k is nominally at start_ms + k*interval_ms on the central clock;
    the emitted stamp additionally carries the sensor's clock bias and a
    jitter draw clipped to half an interval (so stamps never reorder).
    Arrays grow in chunks, which keeps random access cheap and reproducible.
    Advance a stream from one context at a time.
    """

    def __init__(self, scenario, kind, interval_ms, start_ms=0, session=0):
        if kind not in VALUE_ARITY:
            raise ValueError(f"unknown sensor kind: {kind!r}")
        self.scenario = scenario
        self.kind = kind
        self.interval_ms = int(interval_ms)
        self.start_ms = int(start_ms)
        base = [int(scenario.seed) & 0xFFFFFFFF, int(session), _KIND_INDEX[kind]]
        self._jitter_rng = np.random.default_rng(np.random.SeedSequence(base + [0]))
        self._drop_rng = np.random.default_rng(np.random.SeedSequence(base + [1]))
        self._value_rng = np.random.default_rng(np.random.SeedSequence(base + [2]))
        self._n = 0
        self._time = np.empty(0)
        self._dropped = np.empty(0, dtype=bool)
        self._values = np.empty((0, VALUE_ARITY[kind]))
        self._gravity_state = None  # IIR carry for the linear-acceleration estimate

    def sample(self, k):
        """Readout k, or None when that readout was dropped."""
        if k < 0:
            raise ValueError("readout index must be >= 0")
        self._extend_to(k)
        if self._dropped[k]:
            return None
        return Sample(self.kind, int(k), float(self._time[k]), tuple(float(v) for v in self._values[k]))

    def _extend_to(self, k):
        while self._n <= k:
            self._grow(max(_MIN_CHUNK, self._n))

    def _grow(self, count):
        sc = self.scenario
        ks = np.arange(self._n, self._n + count, dtype=np.float64)
        nominal = self.start_ms + ks * self.interval_ms
        jitter = self._jitter_rng.normal(0.0, sc.jitter_std_ms, count)
        half = self.interval_ms / 2.0
        np.clip(jitter, -half, half, out=jitter)
        bias = float(sc.bias_ms.get(self.kind, 0.0))
        dropped = self._drop_rng.random(count) < sc.drop_probability
        t_phys_s = (nominal + jitter) / 1000.0  # actual sampling instants
        values = self._make_values(t_phys_s)
        self._time = np.concatenate([self._time, nominal + bias + jitter])
        self._dropped = np.concatenate([self._dropped, dropped])
        self._values = np.concatenate([self._values, values])
        self._n += count

    def _base_accel(self, t_s):
        sc = self.scenario
        if sc.name == "spin":
            _, accel = spin_motion(t_s, sc.omega0_dps, sc.tau_s, sc.r_m, sc.gravity)
            return accel
        g = gravity_vector(sc.gravity, sc.tilt_deg, sc.azimuth_deg)
        return np.broadcast_to(g, (t_s.size, 3)).copy()

    def _make_values(self, t_s):
        sc = self.scenario
        if self.kind == "accel":
            return self._base_accel(t_s) + self._value_rng.normal(0.0, sc.noise_std, (t_s.size, 3))
        if self.kind == "linear_accel":
            a = self._base_accel(t_s) + self._value_rng.normal(0.0, sc.noise_std, (t_s.size, 3))
            alpha = GRAVITY_ALPHA_PER_25MS ** (self.interval_ms / 25.0)
            g = lowpass_gravity(a, alpha, self._gravity_state)
            self._gravity_state = g[-1].copy()
            return a - g
        if self.kind == "gyro":
            if sc.name == "spin":
                gyro, _ = spin_motion(t_s, sc.omega0_dps, sc.tau_s, sc.r_m, sc.gravity)
            else:
                gyro = np.zeros((t_s.size, 3))
            return gyro + self._value_rng.normal(0.0, sc.gyro_noise_std_dps, (t_s.size, 3))
        if self.kind == "baro":
            _, _, alt = track_point(sc, t_s)
            p = pressure_from_altitude(alt, sc.base_pressure_hpa)
            return (p + self._value_rng.normal(0.0, sc.pressure_noise_std_hpa, t_s.size))[:, np.newaxis]
        if self.kind == "gps":
            lat, lon, _ = track_point(sc, t_s)
            return np.column_stack([lat, lon])
        # battery
        return battery_percent(t_s)[:, np.newaxis]


def next_sample(scenario, kind, k, interval_ms=None):
    """Readout k of a sensor, or None for a dropped readout."""
    if interval_ms is None:
        interval_ms = DEFAULT_INTERVALS_MS[kind]
    return scenario.stream(kind, interval_ms).sample(k)


def rest_accel(t_s, seed, noise_std=0.03, gravity=9.81, tilt_deg=0.0, azimuth_deg=0.0):
    """Resting accelerometer readings: the gravity vector plus white noise.

    t_s may be a scalar or an array of sample times; the noise draws come
    from a generator seeded with seed, one (x, y, z) triple per sample.
    """
    scalar = np.isscalar(t_s)
    t = np.atleast_1d(np.asarray(t_s, dtype=np.float64))
    g = gravity_vector(gravity, tilt_deg, azimuth_deg)
    rng = np.random.default_rng(seed)
    out = g[np.newaxis, :] + rng.normal(0.0, noise_std, (t.size, 3))
    return out[0] if scalar else out


def spin_kinematics(t_s, omega0_dps, tau_s, r_m, gravity=9.81):
    """Noise-free spin signals at t_s: (gyro deg/s, accel m/s^2).

    The rotation rate decays as omega0*exp(-t/tau) on the gyro z axis; the
    accelerometer sees gravity on z plus the centripetal term
    (omega_rad^2 * r) in the face plane.
    """
    if omega0_dps <= 0 or tau_s <= 0 or r_m < 0:
        raise ValueError("need omega0 > 0, tau > 0, r >= 0")
    scalar = np.isscalar(t_s)
    gyro, accel = spin_motion(t_s, omega0_dps, tau_s, r_m, gravity)
    if scalar:
        return gyro[0], accel[0]
    return gyro, accel


def walk_and_climb(scenario, t_s, rng=None):
    """(GpsFix, pressure_hPa) on the scenario track at time t_s seconds."""
    lat, lon, alt = track_point(scenario, float(t_s))
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    p = float(pressure_from_altitude(alt, scenario.base_pressure_hpa))
    p += rng.normal(0.0, scenario.pressure_noise_std_hpa)
    return GpsFix(float(lat), float(lon), float(t_s) * 1000.0), p


_SCENARIO_FLOAT_FIELDS = (
    "duration_s",
    "jitter_std_ms",
    "drop_probability",
    "gravity",
    "noise_std",
    "gyro_noise_std_dps",
    "tilt_deg",
    "azimuth_deg",
    "omega0_dps",
    "tau_s",
    "r_m",
    "base_pressure_hpa",
    "pressure_noise_std_hpa",
    "origin_lat_deg",
    "origin_lon_deg",
    "walk_speed_mps",
    "walk_bearing_deg",
    "climb_m",
    "climb_hold_s",
)


def _scenario_kwargs(text) -> dict:
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    kwargs: dict = {}
    bias = dict(DEFAULT_BIAS_MS)
    waypoints: dict = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "name":
            kwargs["name"] = value
        elif key == "seed":
            kwargs["seed"] = int(value)
        elif key in _SCENARIO_FLOAT_FIELDS:
            kwargs[key] = float(value)
        elif key.startswith("bias_") and key.endswith("_ms"):
            kind = key[len("bias_") : -len("_ms")]
            if kind in DEFAULT_BIAS_MS:
                bias[kind] = float(value)
        elif key.startswith("waypoint"):
            parts = [float(p) for p in value.split(",")]
            if len(parts) != 4:
                raise ValueError(f"waypoint needs t_s,lat,lon,alt_m: {line!r}")
            waypoints[int(key[len("waypoint") :])] = tuple(parts)
    kwargs["bias_ms"] = bias
    if waypoints:
        kwargs["waypoints"] = tuple(waypoints[i] for i in sorted(waypoints))
    return kwargs


def parse_scenario(text) -> Scenario:
    """Scenario from key=value text (the same syntax as the config file).

    Recognized keys are the Scenario fields, bias_<sensor>_ms entries, and
    waypoint<N>=t_s,lat,lon,alt_m lines; unknown keys are ignored. Unlike
    config parsing this is a host-side tool, so bad values raise ValueError.
    """
    return Scenario(**_scenario_kwargs(text))


def load_scenario(name_or_path, seed=None, duration_s=None) -> Scenario:
    """Build a Scenario from a builtin name or a scenario file path."""
    if name_or_path in SCENARIO_NAMES:
        kwargs = {"name": name_or_path}
    else:
        with open(name_or_path, "rb") as fh:
            kwargs = _scenario_kwargs(fh.read())
    if seed is not None:
        kwargs["seed"] = seed
    if duration_s is not None:
        kwargs["duration_s"] = duration_s
    return Scenario(**kwargs)
