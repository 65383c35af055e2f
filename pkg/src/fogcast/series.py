"""Merge surface reports and reanalysis rows into a clean hourly series.

Quality control, in order: drop physically impossible (negative-visibility)
source rows, resolve duplicate reports within an hour by keeping the
earliest, build the hourly grid over the overlapping period, forward-fill
visibility gaps (back-fill only the leading edge), and flag which hours
carry a genuine report.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from .errors import DataError, NoOverlap

SERIES_COLUMNS = (
    "visibility_km",
    "t2m_c",
    "d2m_c",
    "ws10_mps",
    "sp_hpa",
    "lcc_frac",
    "t950_c",
    "metar_reported",
)


@dataclass(frozen=True)
class SiteMeta:
    icao: str
    lat_deg: float
    lon_deg: float
    elevation_m: float

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            d = json.load(fh)
        return cls(
            icao=d["icao"],
            lat_deg=float(d["lat_deg"]),
            lon_deg=float(d["lon_deg"]),
            elevation_m=float(d["elevation_m"]),
        )


@dataclass
class SiteSeries:
    """Hourly site series: contiguous UTC grid, canonical units."""

    meta: SiteMeta
    frame: pd.DataFrame  # indexed by tz-naive UTC DatetimeIndex, SERIES_COLUMNS

    def __len__(self):
        return len(self.frame)

    def check(self):
        """Assert the contiguous-hourly-grid and non-negative-vis invariants."""
        idx = self.frame.index
        if len(idx) > 1:
            steps = np.diff(idx.values).astype("timedelta64[s]")
            if not (steps == np.timedelta64(3600, "s")).all():
                raise DataError("series grid is not contiguous hourly")
        if idx.has_duplicates:
            raise DataError("series grid has duplicate timestamps")
        if (self.frame["visibility_km"] < 0).any():
            raise DataError("series contains negative visibility")
        return self


def _naive_utc(ts):
    """Strip tzinfo after converting to UTC (internal index is tz-naive)."""
    t = pd.Timestamp(ts)
    if t.tzinfo is not None:
        t = t.tz_convert("UTC").tz_localize(None)
    return t


def build_hourly_series(metars, era5, site_meta):
    """Build a SiteSeries over the overlap of the two sources.

    Visibility comes from the reports; every other predictor comes from the
    reanalysis. Negative-visibility report rows are discarded before any
    dedup or fill, so a fill can never propagate an impossible value.
    """
    if not metars or not era5:
        raise NoOverlap("need at least one report and one reanalysis row")

    kept = [m for m in metars if m.visibility_km is None or m.visibility_km >= 0]
    if not kept:
        raise NoOverlap("no usable reports after negative-visibility removal")
    mt = pd.DataFrame(
        {
            "ts": [_naive_utc(m.timestamp) for m in kept],
            "visibility_km": [m.visibility_km for m in kept],
        }
    ).sort_values("ts", kind="stable")
    mt["hour"] = mt["ts"].dt.floor("h")
    # duplicates within the hour: keep the earliest report
    mt = mt.drop_duplicates(subset="hour", keep="first").set_index("hour")

    er = pd.DataFrame(
        {
            "ts": [_naive_utc(r.timestamp) for r in era5],
            "t2m_c": [r.t2m_c for r in era5],
            "d2m_c": [r.d2m_c for r in era5],
            "ws10_mps": [r.ws10_mps for r in era5],
            "sp_hpa": [r.sp_hpa for r in era5],
            "lcc_frac": [r.lcc_frac for r in era5],
            "t950_c": [r.t950_c for r in era5],
        }
    )
    er["hour"] = er["ts"].dt.floor("h")
    er = er.drop_duplicates(subset="hour", keep="first").set_index("hour")

    start = max(mt.index.min(), er.index.min())
    end = min(mt.index.max(), er.index.max())
    if start > end:
        raise NoOverlap(
            f"report and reanalysis ranges are disjoint "
            f"({mt.index.min()}..{mt.index.max()} vs {er.index.min()}..{er.index.max()})"
        )
    grid = pd.date_range(start, end, freq="h")

    out = pd.DataFrame(index=grid)
    out["visibility_km"] = mt["visibility_km"].reindex(grid)
    out["metar_reported"] = grid.isin(mt.index)
    for col in ("t2m_c", "d2m_c", "ws10_mps", "sp_hpa", "lcc_frac", "t950_c"):
        out[col] = er[col].reindex(grid)

    # visibility: forward-fill gaps, back-fill only the leading edge
    out["visibility_km"] = out["visibility_km"].ffill().bfill()
    # reanalysis rows are expected complete; fill any interior gap the same way
    out[list(SERIES_COLUMNS[1:-1])] = out[list(SERIES_COLUMNS[1:-1])].ffill().bfill()
    if out["visibility_km"].isna().any():
        raise DataError("no visibility observation inside the overlap window")

    return SiteSeries(meta=site_meta, frame=out[list(SERIES_COLUMNS)]).check()
