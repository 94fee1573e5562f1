"""Privacy labeling against the configured public-area circle.

Every record gets exactly one of three marks: inside the public area,
outside it, or unknown when no usable GPS fix exists. Scrubbing of the
outside rows happens host-side after download, never on the device.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernels import haversine_m

LABEL_INSIDE = "I"
LABEL_OUTSIDE = "P"
LABEL_UNKNOWN = "?"
PRIVACY_LABELS = (LABEL_INSIDE, LABEL_OUTSIDE, LABEL_UNKNOWN)

# a fix older than this many GPS periods no longer supports an inside/outside claim
STALE_FIX_PERIODS = 3


@dataclass(frozen=True)
class PrivacyCircle:
    center_lat_deg: float
    center_lon_deg: float
    radius_m: int  # 0 = geofencing off

    def __post_init__(self):
        if not -90.0 <= self.center_lat_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.center_lat_deg}")
        if not -180.0 <= self.center_lon_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.center_lon_deg}")
        if self.radius_m != 0 and not 10 <= self.radius_m <= 1000:
            raise ValueError(f"radius out of range: {self.radius_m}")


@dataclass(frozen=True)
class GpsFix:
    lat_deg: float
    lon_deg: float
    time_ms: float  # central-clock time the fix arrived
    valid: bool = True


def distance_m(a, b) -> float:
    """Great-circle distance in meters; a is a GpsFix or a (lat, lon) pair."""
    if isinstance(a, GpsFix):
        lat1, lon1 = a.lat_deg, a.lon_deg
    else:
        lat1, lon1 = a
    lat2, lon2 = b
    return float(haversine_m(lat1, lon1, lat2, lon2))


def label(fix, circle: PrivacyCircle) -> str:
    """Privacy label for the latest fix against the circle.

    With the circle switched off (radius 0) no private zone exists and every
    record is public. Otherwise a missing or invalid fix yields unknown, and
    the boundary itself counts as inside.
    """
    if circle.radius_m == 0:
        return LABEL_INSIDE
    if fix is None or not fix.valid:
        return LABEL_UNKNOWN
    d = distance_m(fix, (circle.center_lat_deg, circle.center_lon_deg))
    return LABEL_INSIDE if d <= circle.radius_m else LABEL_OUTSIDE


def fresh_fix(fix, now_ms, gps_interval_s):
    """The fix if it is still current, else None.

    GPS switched off (interval 0) never produces a usable fix; otherwise a
    fix expires STALE_FIX_PERIODS GPS periods after it arrived.
    """
    if fix is None or gps_interval_s <= 0:
        return None
    if now_ms - fix.time_ms > STALE_FIX_PERIODS * gps_interval_s * 1000:
        return None
    return fix
