"""Seeded synthetic airport-site generator for CI runs and demos.

The generator produces an hourly :class:`~fogcast.series.SiteSeries` whose
weather obeys the same causal story the feature set encodes: a seasonal plus
diurnal temperature cycle keyed to solar elevation, a dew point that tracks
the temperature baseline minus a slowly wandering moisture deficit, and a
nocturnal cooling accumulator that deepens on clear calm nights, shrinking
the dew-point depression and strengthening the boundary-layer inversion.
Fog triggers stochastically when a night hour is humid and calm, persists
with high autocorrelation, and burns off after sunrise. Everything is drawn
from one seeded generator in a fixed order, so a spec maps to exactly one
series.

Writers emit the same columnar formats the ingestion loaders consume, so a
synthetic site can be pushed through the full pipeline from files on disk.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import InvalidSpec
from .metar import KM_PER_STATUTE_MILE, MPS_PER_KNOT
from .series import SERIES_COLUMNS, SiteMeta, SiteSeries
from .solar import solar_elevation

SERIES_START = "2005-01-01"
REGIMES = ("radiative", "rare_event")

# seasonal + diurnal temperature cycle
_T_MEAN = 8.0  # deg C at zero daily-mean elevation
_T_SEASON_GAIN = 0.5  # deg C per degree of daily-mean solar elevation
_T_DIURNAL = 7.0  # deg C peak daytime amplitude
_DIURNAL_LAG_H = 2  # warmth peaks after solar noon
_SYNOPTIC_PHI = 0.98
_SYNOPTIC_SD = 0.35

# nocturnal cooling accumulator
_COOL_RATE = 0.32  # deg C per clear calm night hour
_COOL_WS_SCALE = 5.0  # wind speed that fully suppresses cooling
_COOL_DECAY = 0.6  # retained fraction per daytime hour

# dew-point deficit (temperature baseline minus dew point)
_DEFICIT_MEAN = 3.2
_DEFICIT_PHI = 0.995
_DEFICIT_SD = 0.12
_DEFICIT_MIN = 0.2

# cloud cover, wind, surface pressure
_LCC_REVERT = 0.03
_LCC_MEAN = 0.45
_LCC_SD = 0.08
_WS_REVERT = 0.06
_WS_MEAN = 3.0
_WS_SD = 0.45
_SP_REVERT = 0.03
_SP_MEAN = 1015.0
_SP_SD = 0.55
_SP_LO, _SP_HI = 980.0, 1045.0

# temperature aloft: well-mixed lapse minus a cooling-driven inversion
_LAPSE_950 = 3.6
_INVERSION_GAIN = 1.2
_INVERSION_MAX = 6.0
_INVERSION_WS_SCALE = 6.0

# fog process. The gates read saturation in the shallow layer where fog
# actually forms; that differs from the 2 m screen-level depression by a
# slowly evolving stratification offset. The visibility sensor sits in that
# same layer, so vis is the clean readout of fog risk and the screen-level
# depression the murky one. Saturation alone does not condense anything:
# the trigger also needs hours of accumulated radiative cooling, which is
# why episodes start deep in the night rather than at dusk.
_TRIGGER_DEP = 1.5  # deg C saturation gate
_TRIGGER_WS = 3.0  # m/s wind gate
_TRIGGER_COOL_SCALE = 2.5  # deg C of cooling for full trigger odds
_GATE_OFFSET_PHI = 0.92
_GATE_OFFSET_SD = 1.3  # stationary spread of the stratification offset
_PERSIST_P = 0.85
_PERSIST_DEP = 3.0
# a fog blanket damps surface heating, so episodes can outlive sunrise and
# only clear stochastically once the sun is well up
_BURNOFF_ELEV = 3.0  # deg solar elevation above which burn-off rolls start
_BURNOFF_P = 0.35  # per-hour clearing probability past that elevation
_FOG_SOLAR_DAMP = 0.15  # fraction of diurnal heating reaching a fogged surface
_RARE_SCALE = 0.008  # trigger multiplier for the rare_event regime

# rain: cloudy-spell showers cut visibility without any fog risk (the rain
# washes the saturated layer out and ends or blocks episodes), so low vis is
# predictive only in context
_RAIN_TRIGGER_LCC = 0.55
_RAIN_TRIGGER_P = 0.08
_RAIN_PERSIST_P = 0.8
_VIS_RAIN_LO, _VIS_RAIN_HI = 1.2, 7.0

_VIS_FOG_LO, _VIS_FOG_HI = 0.05, 0.95  # patchy in-hour depth, no memory
# out of fog, visibility reads how far the fog layer is from saturation:
# haze and mist shade it toward (never past) the 1 km line
_VIS_FLOOR = 1.05
_VIS_DEP_GAIN = 1.9
_VIS_JITTER = 1.2
_VIS_MAX = 20.0

MIN_DAYS = 30


@dataclass(frozen=True)
class SyntheticSiteSpec:
    """Recipe for one synthetic site; equal specs yield identical series."""

    lat_deg: float
    lon_deg: float
    n_days: int
    seed: int
    fog_propensity: float
    regime: str = "radiative"

    def validate(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise InvalidSpec(f"lat_deg {self.lat_deg} outside [-90, 90]")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise InvalidSpec(f"lon_deg {self.lon_deg} outside [-180, 180]")
        if self.n_days < MIN_DAYS:
            raise InvalidSpec(f"n_days must be >= {MIN_DAYS}, got {self.n_days}")
        if not 0.0 <= self.fog_propensity <= 1.0:
            raise InvalidSpec(
                f"fog_propensity {self.fog_propensity} outside [0, 1]"
            )
        if self.regime not in REGIMES:
            raise InvalidSpec(f"regime must be one of {REGIMES}, got {self.regime!r}")
        return self


def _meta_for(spec, icao):
    return SiteMeta(
        icao=icao,
        lat_deg=float(spec.lat_deg),
        lon_deg=float(spec.lon_deg),
        elevation_m=0.0,
    )


def synthesize_site(spec, icao="SYNT"):
    """Generate a deterministic hourly SiteSeries from a validated spec."""
    spec.validate()
    n = spec.n_days * 24
    grid = pd.date_range(SERIES_START, periods=n, freq="h")
    ts = grid.values.astype("datetime64[s]")

    elev = solar_elevation(spec.lat_deg, spec.lon_deg, ts)
    elev_lagged = solar_elevation(
        spec.lat_deg, spec.lon_deg, ts - np.timedelta64(_DIURNAL_LAG_H, "h")
    )
    daily_mean_elev = np.repeat(elev.reshape(spec.n_days, 24).mean(axis=1), 24)
    t_season = _T_MEAN + _T_SEASON_GAIN * daily_mean_elev
    diurnal = _T_DIURNAL * np.maximum(np.sin(np.radians(elev_lagged)), 0.0)

    # one generator, fixed draw order: the series is a pure function of the spec
    rng = np.random.default_rng(spec.seed)
    e_syn = rng.normal(0.0, _SYNOPTIC_SD, n)
    e_def = rng.normal(0.0, _DEFICIT_SD, n)
    e_lcc = rng.normal(0.0, _LCC_SD, n)
    e_ws = rng.normal(0.0, _WS_SD, n)
    e_sp = rng.normal(0.0, _SP_SD, n)
    u_trigger = rng.random(n)
    u_persist = rng.random(n)
    u_vis_fog = rng.uniform(_VIS_FOG_LO, _VIS_FOG_HI, n)
    u_vis_clear = rng.random(n)
    e_gate = rng.normal(
        0.0, _GATE_OFFSET_SD * math.sqrt(1.0 - _GATE_OFFSET_PHI**2), n
    )
    u_burnoff = rng.random(n)
    u_rain_trigger = rng.random(n)
    u_rain_persist = rng.random(n)
    u_vis_rain = rng.random(n)

    trigger_p = spec.fog_propensity
    if spec.regime == "rare_event":
        trigger_p *= _RARE_SCALE

    synoptic = 0.0
    deficit = _DEFICIT_MEAN
    lcc_state = _LCC_MEAN
    ws_state = _WS_MEAN
    sp_state = _SP_MEAN
    night_cool = 0.0
    gate_offset = 0.0
    in_fog = False
    raining = False

    t2m = np.empty(n)
    d2m = np.empty(n)
    ws10 = np.empty(n)
    sp = np.empty(n)
    lcc = np.empty(n)
    t950 = np.empty(n)
    vis = np.empty(n)

    for t in range(n):
        synoptic = _SYNOPTIC_PHI * synoptic + e_syn[t]
        deficit = max(
            _DEFICIT_MIN,
            _DEFICIT_MEAN + _DEFICIT_PHI * (deficit - _DEFICIT_MEAN) + e_def[t],
        )
        lcc_state = min(
            1.0, max(0.0, lcc_state + _LCC_REVERT * (_LCC_MEAN - lcc_state) + e_lcc[t])
        )
        ws_state = max(0.0, ws_state + _WS_REVERT * (_WS_MEAN - ws_state) + e_ws[t])
        sp_state = min(
            _SP_HI,
            max(_SP_LO, sp_state + _SP_REVERT * (_SP_MEAN - sp_state) + e_sp[t]),
        )

        # a fog blanket shuts down both radiative cooling and solar heating
        if elev[t] < 0.0:
            if not in_fog:
                clear = 1.0 - lcc_state
                calm = max(0.0, 1.0 - ws_state / _COOL_WS_SCALE)
                night_cool += _COOL_RATE * clear * calm
        else:
            night_cool *= _COOL_DECAY

        t_base = t_season[t] + synoptic
        damp = _FOG_SOLAR_DAMP if in_fog else 1.0
        temp = t_base + damp * diurnal[t] - night_cool
        dew = min(t_base - deficit, temp - 0.05)
        dep = temp - dew

        inversion = (
            min(_INVERSION_MAX, _INVERSION_GAIN * night_cool)
            * (1.0 - lcc_state)
            * max(0.0, 1.0 - ws_state / _INVERSION_WS_SCALE)
        )

        gate_offset = _GATE_OFFSET_PHI * gate_offset + e_gate[t]
        dep_gate = dep + gate_offset

        if raining:
            raining = u_rain_persist[t] < _RAIN_PERSIST_P
        else:
            raining = (
                lcc_state > _RAIN_TRIGGER_LCC
                and u_rain_trigger[t] < _RAIN_TRIGGER_P
            )

        if raining:
            in_fog = False
        elif in_fog:
            stays = dep_gate < _PERSIST_DEP and u_persist[t] < _PERSIST_P
            if elev[t] > _BURNOFF_ELEV:
                stays = stays and u_burnoff[t] >= _BURNOFF_P
            in_fog = stays
        elif (
            elev[t] < 0.0
            and dep_gate < _TRIGGER_DEP
            and ws_state < _TRIGGER_WS
            and u_trigger[t]
            < trigger_p * min(1.0, night_cool / _TRIGGER_COOL_SCALE)
        ):
            in_fog = True

        if in_fog:
            vis[t] = u_vis_fog[t]
        else:
            vis[t] = min(
                _VIS_MAX,
                _VIS_FLOOR
                + _VIS_DEP_GAIN * max(0.0, dep_gate)
                + _VIS_JITTER * u_vis_clear[t],
            )
            if raining:
                vis[t] = min(
                    vis[t], _VIS_RAIN_LO + (_VIS_RAIN_HI - _VIS_RAIN_LO) * u_vis_rain[t]
                )

        t2m[t] = temp
        d2m[t] = dew
        ws10[t] = ws_state
        sp[t] = sp_state
        lcc[t] = lcc_state
        t950[t] = temp - _LAPSE_950 + inversion

    frame = pd.DataFrame(
        {
            "visibility_km": vis,
            "t2m_c": t2m,
            "d2m_c": d2m,
            "ws10_mps": ws10,
            "sp_hpa": sp,
            "lcc_frac": lcc,
            "t950_c": t950,
            "metar_reported": np.ones(n, dtype=bool),
        },
        index=grid,
    )
    return SiteSeries(meta=_meta_for(spec, icao), frame=frame[list(SERIES_COLUMNS)]).check()


def fog_rate(series):
    """Fraction of hours below the 1 km fog line."""
    return float((series.frame["visibility_km"].to_numpy() < 1.0).mean())


def write_asos_csv(series, path, missing_fraction=0.0, seed=0):
    """Write the series as an ASOS-archive CSV the report loader accepts.

    missing_fraction > 0 drops a seeded random subset of rows, emulating
    hours where the station filed no report; ingestion forward-fills them.
    Returns the number of rows written.
    """
    frame = series.frame
    n = len(frame)
    keep = np.ones(n, dtype=bool)
    if missing_fraction > 0.0:
        drop_rng = np.random.default_rng(seed)
        keep = drop_rng.random(n) >= missing_fraction
        keep[0] = True  # the overlap window must open with a report
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["station", "valid", "tmpf", "dwpf", "vsby", "sknt", "mslp"])
        for i, (stamp, row) in enumerate(frame.iterrows()):
            if not keep[i]:
                continue
            w.writerow(
                [
                    series.meta.icao,
                    stamp.strftime("%Y-%m-%d %H:%M"),
                    "%.10g" % (row["t2m_c"] * 9.0 / 5.0 + 32.0),
                    "%.10g" % (row["d2m_c"] * 9.0 / 5.0 + 32.0),
                    "%.10g" % (row["visibility_km"] / KM_PER_STATUTE_MILE),
                    "%.10g" % (row["ws10_mps"] / MPS_PER_KNOT),
                    "%.10g" % row["sp_hpa"],
                ]
            )
    return int(keep.sum())


def write_era5_csv(series, path):
    """Write the series' reanalysis columns in the loader's CSV format."""
    frame = series.frame
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "t2m_c", "d2m_c", "ws10_mps", "sp_hpa", "lcc_frac", "t950_c"])
        for stamp, row in frame.iterrows():
            w.writerow(
                [stamp.strftime("%Y-%m-%dT%H:%M:%SZ")]
                + [
                    "%.17g" % row[col]
                    for col in ("t2m_c", "d2m_c", "ws10_mps", "sp_hpa", "lcc_frac", "t950_c")
                ]
            )
    return len(frame)


def write_site_files(series, directory, missing_fraction=0.0, seed=0):
    """Write metar/era5 CSVs plus the site-metadata JSON; returns the paths."""
    import os

    os.makedirs(directory, exist_ok=True)
    base = os.path.join(directory, series.meta.icao.lower())
    paths = {
        "metar": base + "_metar.csv",
        "era5": base + "_era5.csv",
        "site": base + "_site.json",
    }
    write_asos_csv(series, paths["metar"], missing_fraction=missing_fraction, seed=seed)
    write_era5_csv(series, paths["era5"])
    series.meta.to_json(paths["site"])
    return paths
