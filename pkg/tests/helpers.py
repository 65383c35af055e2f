"""Shared construction helpers for the test suite."""

import numpy as np
import pandas as pd

from fogcast.series import SiteMeta, SiteSeries

META = SiteMeta(icao="SCEL", lat_deg=-33.39, lon_deg=-70.79, elevation_m=474.0)


def make_series(n_hours, vis=None, t2m=None, d2m=None, reported_mask=None, **era5_kw):
    """Construct an n-hour SiteSeries directly (bypasses ingestion QC)."""
    idx = pd.date_range("2005-07-01", periods=n_hours, freq="h")
    rng = np.random.default_rng(0)
    frame = pd.DataFrame(
        {
            "visibility_km": vis if vis is not None else rng.uniform(2, 10, n_hours),
            "t2m_c": t2m if t2m is not None else 10 + 3 * rng.standard_normal(n_hours),
            "d2m_c": d2m if d2m is not None else 6 + 2 * rng.standard_normal(n_hours),
            "ws10_mps": era5_kw.get("ws10_mps", np.full(n_hours, 2.5)),
            "sp_hpa": era5_kw.get("sp_hpa", np.full(n_hours, 1015.0)),
            "lcc_frac": era5_kw.get("lcc_frac", np.full(n_hours, 0.25)),
            "t950_c": era5_kw.get("t950_c", np.full(n_hours, 9.0)),
            "metar_reported": (
                reported_mask if reported_mask is not None else np.full(n_hours, True)
            ),
        },
        index=idx,
    )
    return SiteSeries(meta=META, frame=frame)
