"""Solar geometry from timestamp and site coordinates.

Closed-form declination and equation of time (Spencer 1971 Fourier series,
both driven by the same fractional-year angle), composed into the geometric
solar elevation angle. No ephemeris dependency; worst-case elevation error
against a high-precision reference is well under 1 degree, which is
immaterial for a feature that encodes the diurnal radiative cycle.

All angle inputs/outputs are degrees. Functions accept scalars or numpy
arrays and vectorize elementwise; scalar input yields a Python float.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRangeDay, OutOfRangeLatitude

# Clip amplitude for the declination series: keeps |declination| within the
# nominal axial-tilt bound used by the rest of the pipeline.
_MAX_DECLINATION = 23.44


def _fractional_year(day_of_year):
    """Spencer's fractional-year angle in radians (day 1 -> 0)."""
    return 2.0 * np.pi * (np.asarray(day_of_year, dtype=np.float64) - 1.0) / 365.0


def solar_declination(day_of_year):
    """Solar declination in degrees for a civil day of year (1..366).

    Spencer (1971) Fourier series, clipped to +-23.44 deg. The series keeps
    the seasonal phase (perihelion asymmetry) that a plain sinusoid misses,
    which is what keeps the composed elevation within its error budget.
    """
    doy = np.asarray(day_of_year)
    if np.any(doy < 1) or np.any(doy > 366):
        raise OutOfRangeDay(f"day_of_year must be in 1..366, got {day_of_year}")
    g = _fractional_year(doy)
    dec_rad = (
        0.006918
        - 0.399912 * np.cos(g)
        + 0.070257 * np.sin(g)
        - 0.006758 * np.cos(2 * g)
        + 0.000907 * np.sin(2 * g)
        - 0.002697 * np.cos(3 * g)
        + 0.001480 * np.sin(3 * g)
    )
    dec = np.clip(np.degrees(dec_rad), -_MAX_DECLINATION, _MAX_DECLINATION)
    return float(dec) if np.isscalar(day_of_year) else dec


def equation_of_time_minutes(day_of_year):
    """Equation of time in minutes (apparent minus mean solar time).

    Spencer (1971); 229.18 = 1440 / (2 pi) converts radians to minutes.
    """
    doy = np.asarray(day_of_year)
    if np.any(doy < 1) or np.any(doy > 366):
        raise OutOfRangeDay(f"day_of_year must be in 1..366, got {day_of_year}")
    g = _fractional_year(doy)
    eot = 229.18 * (
        0.000075
        + 0.001868 * np.cos(g)
        - 0.032077 * np.sin(g)
        - 0.014615 * np.cos(2 * g)
        - 0.040849 * np.sin(2 * g)
    )
    return float(eot) if np.isscalar(day_of_year) else eot


def _split_timestamp(timestamp):
    """Return (day_of_year, utc_hours, was_scalar) from datetime-like input."""
    ts = np.asarray(timestamp, dtype="datetime64[s]")
    scalar = ts.ndim == 0
    ts = np.atleast_1d(ts)
    days = ts.astype("datetime64[D]")
    hours = (ts - days) / np.timedelta64(1, "h")
    doy = ((days - days.astype("datetime64[Y]")) / np.timedelta64(1, "D")).astype(
        np.int64
    ) + 1
    return doy, hours, scalar


def hour_angle(timestamp, lon_deg):
    """Solar hour angle in degrees, wrapped to [-180, 180).

    Apparent solar time = UTC hours + lon/15 + EoT/60; the hour angle is
    15 deg per hour past apparent solar noon (negative in the morning).
    """
    doy, hours, scalar = _split_timestamp(timestamp)
    solar_time = hours + np.asarray(lon_deg, dtype=np.float64) / 15.0
    solar_time = solar_time + equation_of_time_minutes(doy) / 60.0
    ha = (15.0 * (solar_time - 12.0) + 180.0) % 360.0 - 180.0
    return float(ha[0]) if scalar and ha.size == 1 else ha


def elevation_from(lat_deg, declination_deg, hour_angle_deg):
    """Elevation in degrees from latitude, declination, and hour angle.

    elevation = asin(sin(lat) sin(dec) + cos(lat) cos(dec) cos(h)), clipped
    into arcsin's domain against rounding. Refraction is ignored.
    """
    lat = np.radians(np.asarray(lat_deg, dtype=np.float64))
    dec = np.radians(np.asarray(declination_deg, dtype=np.float64))
    ha = np.radians(np.asarray(hour_angle_deg, dtype=np.float64))
    sin_el = np.sin(lat) * np.sin(dec) + np.cos(lat) * np.cos(dec) * np.cos(ha)
    return np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))


def solar_elevation(lat_deg, lon_deg, timestamp):
    """Geometric solar elevation angle in degrees, in [-90, 90]."""
    lat = np.asarray(lat_deg, dtype=np.float64)
    if np.any(np.abs(lat) > 90.0):
        raise OutOfRangeLatitude(f"latitude must be in [-90, 90], got {lat_deg}")
    doy, _, scalar = _split_timestamp(timestamp)
    el = elevation_from(lat, solar_declination(doy), hour_angle(timestamp, lon_deg))
    el = np.atleast_1d(el)
    return float(el[0]) if scalar and el.size == 1 else el


@dataclass(frozen=True)
class SolarGeometry:
    """Declination, hour angle, and elevation for one site and instant."""

    declination_deg: float
    hour_angle_deg: float
    elevation_deg: float
    latitude_deg: float

    @classmethod
    def at(cls, lat_deg, lon_deg, timestamp):
        doy, _, _ = _split_timestamp(timestamp)
        return cls(
            declination_deg=solar_declination(int(doy[0])),
            hour_angle_deg=hour_angle(timestamp, lon_deg),
            elevation_deg=solar_elevation(lat_deg, lon_deg, timestamp),
            latitude_deg=float(lat_deg),
        )
