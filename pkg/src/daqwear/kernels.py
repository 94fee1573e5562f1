"""Numeric kernels: numba-compiled hot loops with pure numpy/scipy twins.

The backend is fixed once at import time. Setting DAQWEAR_NO_NUMBA=1 (or
running without numba installed) selects the numpy implementations; both
paths produce the same arrays. benchmarks/bench_kernels.py times the two
backends against each other.
"""

import math
import os

import numpy as np
from scipy.signal import lfilter

EARTH_RADIUS_M = 6_371_000.0
_DEG2RAD = math.pi / 180.0


def _numba_disabled():
    return os.environ.get("DAQWEAR_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and not _numba_disabled()


# --- numpy twins ------------------------------------------------------------


def haversine_m_np(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters on the R = 6371 km sphere."""
    phi1 = lat1 * _DEG2RAD
    phi2 = lat2 * _DEG2RAD
    dphi = (lat2 - lat1) * _DEG2RAD
    dlam = (lon2 - lon1) * _DEG2RAD
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * np.arcsin(np.sqrt(h))


def lowpass_gravity_np(accel, alpha, g_init=None):
    """Gravity estimate g[k] = alpha*g[k-1] + (1-alpha)*a[k] over an (N, 3) block.

    Seeded with g[-1] = g_init, or with the first sample when g_init is None,
    so a constant input passes through unchanged from row 0.
    """
    accel = np.asarray(accel, dtype=np.float64)
    if accel.size == 0:
        return accel.copy()
    g0 = accel[0] if g_init is None else np.asarray(g_init, dtype=np.float64)
    zi = (alpha * g0)[np.newaxis, :]
    out, _ = lfilter([1.0 - alpha], [1.0, -alpha], accel, axis=0, zi=zi)
    return out


def spin_motion_np(t_s, omega0_dps, tau_s, r_m, gravity):
    """Decaying flat spin about the face normal.

    Returns (gyro deg/s, accel m/s^2), both (N, 3): the rotation rate sits on
    the gyro z axis, the centripetal term (omega_rad^2 * r) on the accel y
    axis, and gravity on the accel z axis.
    """
    t = np.asarray(t_s, dtype=np.float64)
    omega_dps = omega0_dps * np.exp(-t / tau_s)
    gyro = np.zeros((t.size, 3))
    gyro[:, 2] = omega_dps
    accel = np.zeros((t.size, 3))
    omega_rad = omega_dps * _DEG2RAD
    accel[:, 1] = omega_rad * omega_rad * r_m
    accel[:, 2] = gravity
    return gyro, accel


# --- numba twins ------------------------------------------------------------

if NUMBA_ENABLED:

    @_njit(cache=True)
    def _haversine_loop(lat1, lon1, lat2, lon2, out):
        for i in range(out.size):
            phi1 = lat1[i] * _DEG2RAD
            phi2 = lat2[i] * _DEG2RAD
            dphi = (lat2[i] - lat1[i]) * _DEG2RAD
            dlam = (lon2[i] - lon1[i]) * _DEG2RAD
            h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
            out[i] = EARTH_RADIUS_M * 2.0 * math.asin(math.sqrt(h))
        return out

    @_njit(cache=True)
    def _lowpass_loop(accel, alpha, g_init, out):
        beta = 1.0 - alpha
        g0 = g_init[0]
        g1 = g_init[1]
        g2 = g_init[2]
        for k in range(accel.shape[0]):
            g0 = beta * accel[k, 0] + alpha * g0
            g1 = beta * accel[k, 1] + alpha * g1
            g2 = beta * accel[k, 2] + alpha * g2
            out[k, 0] = g0
            out[k, 1] = g1
            out[k, 2] = g2
        return out

    @_njit(cache=True)
    def _spin_loop(t, omega0_dps, tau_s, r_m, gravity, gyro, accel):
        for i in range(t.size):
            omega_dps = omega0_dps * math.exp(-t[i] / tau_s)
            gyro[i, 0] = 0.0
            gyro[i, 1] = 0.0
            gyro[i, 2] = omega_dps
            omega_rad = omega_dps * _DEG2RAD
            accel[i, 0] = 0.0
            accel[i, 1] = omega_rad * omega_rad * r_m
            accel[i, 2] = gravity
        return gyro, accel

    def haversine_m_nb(lat1, lon1, lat2, lon2):
        lat1, lon1, lat2, lon2 = np.broadcast_arrays(
            np.asarray(lat1, dtype=np.float64),
            np.asarray(lon1, dtype=np.float64),
            np.asarray(lat2, dtype=np.float64),
            np.asarray(lon2, dtype=np.float64),
        )
        out = np.empty(lat1.size, dtype=np.float64)
        _haversine_loop(
            np.ascontiguousarray(lat1).ravel(),
            np.ascontiguousarray(lon1).ravel(),
            np.ascontiguousarray(lat2).ravel(),
            np.ascontiguousarray(lon2).ravel(),
            out,
        )
        return out.reshape(lat1.shape)

    def lowpass_gravity_nb(accel, alpha, g_init=None):
        accel = np.ascontiguousarray(accel, dtype=np.float64)
        if accel.size == 0:
            return accel.copy()
        g0 = accel[0] if g_init is None else np.asarray(g_init, dtype=np.float64)
        out = np.empty_like(accel)
        _lowpass_loop(accel, float(alpha), np.ascontiguousarray(g0), out)
        return out

    def spin_motion_nb(t_s, omega0_dps, tau_s, r_m, gravity):
        t = np.ascontiguousarray(t_s, dtype=np.float64).ravel()
        gyro = np.empty((t.size, 3))
        accel = np.empty((t.size, 3))
        _spin_loop(t, float(omega0_dps), float(tau_s), float(r_m), float(gravity), gyro, accel)
        return gyro, accel


# --- dispatch ---------------------------------------------------------------

if NUMBA_ENABLED:
    _haversine_impl = haversine_m_nb
    _lowpass_impl = lowpass_gravity_nb
    _spin_impl = spin_motion_nb
else:
    _haversine_impl = haversine_m_np
    _lowpass_impl = lowpass_gravity_np
    _spin_impl = spin_motion_np


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters; accepts scalars or arrays."""
    scalar = np.isscalar(lat1) and np.isscalar(lon1) and np.isscalar(lat2) and np.isscalar(lon2)
    out = _haversine_impl(
        np.atleast_1d(np.asarray(lat1, dtype=np.float64)),
        np.atleast_1d(np.asarray(lon1, dtype=np.float64)),
        np.atleast_1d(np.asarray(lat2, dtype=np.float64)),
        np.atleast_1d(np.asarray(lon2, dtype=np.float64)),
    )
    return float(out[0]) if scalar else out


def lowpass_gravity(accel, alpha, g_init=None):
    return _lowpass_impl(accel, alpha, g_init)


def spin_motion(t_s, omega0_dps, tau_s, r_m, gravity=9.81):
    return _spin_impl(np.atleast_1d(np.asarray(t_s, dtype=np.float64)), omega0_dps, tau_s, r_m, gravity)
