"""Generate the frozen solar-position reference set used by the tests.

Independent high-precision oracle: the Astronomical Almanac low-precision
algorithm (Michalsky 1988), accurate to ~0.01 deg over 1950-2050. This script
deliberately shares no code with the package; it freezes geometric (not
refraction-corrected) elevations for 1000 random (lat, lon, time) samples
plus a few hand-picked anchor cases.

Run from the repository root:  python tools/make_solar_reference.py
"""

import json
import math
import pathlib
from datetime import datetime, timedelta, timezone

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "data" / "solar_reference.json"


def michalsky_elevation(lat_deg, lon_deg, dt_utc):
    hour = dt_utc.hour + dt_utc.minute / 60.0 + dt_utc.second / 3600.0
    delta = dt_utc.year - 1949
    leap = delta // 4
    doy = dt_utc.timetuple().tm_yday
    jd = 2432916.5 + delta * 365.0 + leap + doy + hour / 24.0
    n = jd - 2451545.0
    mean_lon = (280.460 + 0.9856474 * n) % 360.0
    mean_anom = math.radians((357.528 + 0.9856003 * n) % 360.0)
    ecl_lon = math.radians(
        (mean_lon + 1.915 * math.sin(mean_anom) + 0.020 * math.sin(2 * mean_anom)) % 360.0
    )
    obliquity = math.radians(23.439 - 0.0000004 * n)
    ra = math.atan2(math.cos(obliquity) * math.sin(ecl_lon), math.cos(ecl_lon)) % (2 * math.pi)
    dec = math.asin(math.sin(obliquity) * math.sin(ecl_lon))
    gmst = (6.697375 + 0.0657098242 * n + hour) % 24.0
    lmst = math.radians(((gmst + lon_deg / 15.0) % 24.0) * 15.0)
    ha = lmst - ra
    if ha < -math.pi:
        ha += 2 * math.pi
    if ha > math.pi:
        ha -= 2 * math.pi
    lat = math.radians(lat_deg)
    sin_el = math.sin(lat) * math.sin(dec) + math.cos(lat) * math.cos(dec) * math.cos(ha)
    return math.degrees(math.asin(max(-1.0, min(1.0, sin_el))))


def main():
    rng = np.random.default_rng(20260814)
    base = datetime(2000, 1, 1, tzinfo=timezone.utc)
    span = int((datetime(2035, 1, 1, tzinfo=timezone.utc) - base).total_seconds())
    samples = []
    for _ in range(1000):
        lat = float(rng.uniform(-90.0, 90.0))
        lon = float(rng.uniform(-180.0, 180.0))
        t = base + timedelta(seconds=int(rng.integers(0, span)))
        samples.append(
            {
                "lat_deg": round(lat, 6),
                "lon_deg": round(lon, 6),
                "utc": t.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "elevation_deg": round(
                    michalsky_elevation(round(lat, 6), round(lon, 6), t), 6
                ),
            }
        )
    anchors = [
        # mid-winter local midnight at a southern-hemisphere airport: night
        (-33.45, -70.79, datetime(2010, 6, 21, 4, 0, tzinfo=timezone.utc)),
        # equator, near-equinox, near apparent solar noon: high sun
        (0.0, 0.0, datetime(2010, 3, 20, 12, 8, tzinfo=timezone.utc)),
        (51.47, -0.45, datetime(2005, 12, 21, 12, 0, tzinfo=timezone.utc)),
    ]
    for lat, lon, t in anchors:
        samples.append(
            {
                "lat_deg": lat,
                "lon_deg": lon,
                "utc": t.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "elevation_deg": round(michalsky_elevation(lat, lon, t), 6),
            }
        )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(samples, indent=1) + "\n")
    print(f"wrote {len(samples)} samples to {OUT}")


if __name__ == "__main__":
    main()
