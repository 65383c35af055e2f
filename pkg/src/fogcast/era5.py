"""Reanalysis export loading and grid-point selection.

The reanalysis arrives as a columnar CSV export (one site, hourly rows);
decoding netCDF/GRIB is out of scope. Wind may be given directly as
ws10_mps or as a u/v component pair.
"""

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import EmptyGrid, MissingColumn, NonMonotonicTime, RowError

EARTH_RADIUS_KM = 6371.0

_BASE_COLUMNS = ("t2m_c", "d2m_c", "sp_hpa", "lcc_frac", "t950_c")


@dataclass(frozen=True)
class Era5Record:
    """One hourly reanalysis row in canonical units."""

    timestamp: datetime
    t2m_c: float
    d2m_c: float
    ws10_mps: float
    sp_hpa: float
    lcc_frac: float
    t950_c: float


@dataclass(frozen=True, order=True)
class GridPoint:
    lat_deg: float
    lon_deg: float


def _parse_time(cell):
    cell = cell.strip()
    for fmt in ("%Y-%m-%dT%H:%M:%SZ", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S",
                "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"):
        try:
            return datetime.strptime(cell, fmt).replace(tzinfo=timezone.utc)
        except ValueError:
            continue
    raise ValueError(f"unparseable time cell {cell!r}")


def load_era5_csv(stream):
    """Load a reanalysis CSV export; returns (records, row_errors).

    Header must name time plus the base variables, and either ws10_mps or
    the u10_mps/v10_mps pair. Rows with out-of-range cloud fraction or
    non-numeric cells are collected as RowError; duplicate or backwards
    timestamps abort with NonMonotonicTime.
    """
    reader = csv.DictReader(stream)
    header = reader.fieldnames or []
    if "time" not in header:
        raise MissingColumn("ERA5 CSV lacks required column 'time'")
    for col in _BASE_COLUMNS:
        if col not in header:
            raise MissingColumn(f"ERA5 CSV lacks required column {col!r}")
    has_ws = "ws10_mps" in header
    has_uv = "u10_mps" in header and "v10_mps" in header
    if not has_ws and not has_uv:
        raise MissingColumn("ERA5 CSV needs ws10_mps or the u10_mps/v10_mps pair")

    records, errors = [], []
    last_ts = None
    for i, row in enumerate(reader):
        try:
            ts = _parse_time(row["time"])
            vals = {col: float(row[col]) for col in _BASE_COLUMNS}
            if has_ws:
                ws = float(row["ws10_mps"])
            else:
                ws = math.hypot(float(row["u10_mps"]), float(row["v10_mps"]))
        except (ValueError, TypeError) as exc:
            errors.append(RowError(index=i, reason=str(exc)))
            continue
        if last_ts is not None and ts <= last_ts:
            raise NonMonotonicTime(
                f"row {i}: time {ts.isoformat()} not after {last_ts.isoformat()}"
            )
        last_ts = ts
        if not 0.0 <= vals["lcc_frac"] <= 1.0:
            errors.append(
                RowError(index=i, reason=f"lcc_frac {vals['lcc_frac']} outside [0, 1]")
            )
            continue
        if ws < 0.0:
            errors.append(RowError(index=i, reason=f"negative wind speed {ws}"))
            continue
        records.append(Era5Record(timestamp=ts, ws10_mps=ws, **vals))
    return records, errors


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in km on a spherical Earth."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def nearest_grid_point(site_lat, site_lon, grid):
    """Grid point minimizing great-circle distance; ties by smallest (lat, lon)."""
    if not grid:
        raise EmptyGrid("grid must be non-empty")
    return min(
        grid,
        key=lambda p: (haversine_km(site_lat, site_lon, p.lat_deg, p.lon_deg), p),
    )


def regular_grid(lat_min, lat_max, lon_min, lon_max, step=0.25):
    """All grid nodes of a regular lat/lon lattice covering the window."""
    points = []
    nlat = int(round((lat_max - lat_min) / step))
    nlon = int(round((lon_max - lon_min) / step))
    for i in range(nlat + 1):
        for j in range(nlon + 1):
            points.append(GridPoint(lat_min + i * step, lon_min + j * step))
    return points
