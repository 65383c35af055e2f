"""The 19 canonical features, the forward-shifted fog label, and dataset I/O.

Feature order is frozen: persisted models and scalers index columns by
position. Sign conventions: gradiente_termico_950_sfc = t950 - t2m (positive
= inversion), tasa_enfriamiento = (T(t-d) - T(t))/d (positive = cooling),
trend features are forward differences D(t) - D(t-d).
"""

import json
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from .errors import EmptyDataset, OverlappingRanges, SchemaMismatch, SeriesTooShort
from .solar import solar_elevation

FOG_VISIBILITY_KM = 1.0
SCHEMA_VERSION = 1

FEATURE_NAMES = (
    "visibilidad_actual",
    "visibilidad_lag_1h",
    "visibilidad_lag_3h",
    "visibilidad_lag_6h",
    "temperatura_2m",
    "depresion_punto_rocio",
    "humedad_relativa",
    "velocidad_viento_10m",
    "presion_superficie",
    "gradiente_termico_950_sfc",
    "cobertura_nubes_bajas",
    "tendencia_depresion_rocio_3h",
    "tendencia_depresion_rocio_6h",
    "tasa_enfriamiento_3h",
    "tasa_enfriamiento_6h",
    "tendencia_presion_3h",
    "angulo_solar",
    "dia_del_ano",
    "is_night",
)

FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

# Magnus coefficients for saturation vapour pressure over water
_MAGNUS_A = 17.625
_MAGNUS_B = 243.04

# rows lost at the head to the longest lag/trend window
_MAX_LAG_H = 6


def relative_humidity(t2m_c, d2m_c):
    """Relative humidity (%) from temperature and dew point via Magnus.

    RH = 100 exp(a Td/(b+Td) - a T/(b+T)), clamped to [0, 100].
    """
    t = np.asarray(t2m_c, dtype=np.float64)
    td = np.asarray(d2m_c, dtype=np.float64)
    rh = 100.0 * np.exp(
        _MAGNUS_A * td / (_MAGNUS_B + td) - _MAGNUS_A * t / (_MAGNUS_B + t)
    )
    return np.clip(rh, 0.0, 100.0)


@dataclass
class FeatureDataset:
    """Immutable-by-convention feature matrix with aligned labels.

    X is rows x 19 (unscaled unless stated), y is 0/1 where 1 means the
    visibility at timestamps[i] + horizon_h is below 1 km on a reported hour.
    """

    schema: tuple
    timestamps: np.ndarray  # datetime64[s]
    X: np.ndarray
    y: np.ndarray
    horizon_h: int
    site: str

    def __len__(self):
        return self.X.shape[0]

    @property
    def base_rate(self):
        return float(self.y.mean()) if len(self) else 0.0

    def column(self, name):
        return self.X[:, self.schema.index(name)]

    def subset(self, mask):
        return replace(
            self,
            timestamps=self.timestamps[mask],
            X=self.X[mask],
            y=self.y[mask],
        )

    def to_csv(self, csv_path, sidecar_path):
        """Write the CSV + sidecar JSON pair (the on-disk dataset format)."""
        df = pd.DataFrame(self.X, columns=list(self.schema))
        df.insert(0, "timestamp", _format_ts(self.timestamps))
        df["label"] = self.y
        # %.17g survives the text round trip bit-for-bit for float64
        df.to_csv(csv_path, index=False, lineterminator="\n", float_format="%.17g")
        with open(sidecar_path, "w") as fh:
            json.dump(
                {
                    "site": self.site,
                    "horizon_h": self.horizon_h,
                    "schema_version": SCHEMA_VERSION,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")

    @classmethod
    def from_csv(cls, csv_path, sidecar_path):
        with open(sidecar_path) as fh:
            side = json.load(fh)
        if side.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(
                f"dataset schema_version {side.get('schema_version')!r}, "
                f"expected {SCHEMA_VERSION}"
            )
        df = pd.read_csv(csv_path, float_precision="round_trip")
        want = ["timestamp", *FEATURE_NAMES, "label"]
        if list(df.columns) != want:
            raise SchemaMismatch(f"dataset columns {list(df.columns)[:5]}... do not match schema")
        return cls(
            schema=FEATURE_NAMES,
            timestamps=df["timestamp"].to_numpy(dtype="datetime64[s]"),
            X=df[list(FEATURE_NAMES)].to_numpy(dtype=np.float64),
            y=df["label"].to_numpy(dtype=np.int64),
            horizon_h=int(side["horizon_h"]),
            site=side["site"],
        )


def _format_ts(ts):
    return np.datetime_as_string(ts.astype("datetime64[s]"), unit="s")


def assemble_features(series, horizon_h=2):
    """Build the FeatureDataset from a clean hourly SiteSeries.

    The first 6 rows (longest lag window) and the last horizon_h rows
    (undefined label) are dropped; everything in between is complete by
    construction. Hours without a genuine report at t + horizon are labeled
    0 (conservative rule).
    """
    if horizon_h < 1:
        raise ValueError(f"horizon_h must be >= 1, got {horizon_h}")
    f = series.frame
    n = len(f)
    if n < _MAX_LAG_H + horizon_h + 1:
        raise SeriesTooShort(
            f"need at least {_MAX_LAG_H + horizon_h + 1} hourly rows, got {n}"
        )

    vis = f["visibility_km"]
    t2m = f["t2m_c"]
    d2m = f["d2m_c"]
    depression = t2m - d2m
    press = f["sp_hpa"]
    ts = f.index.values.astype("datetime64[s]")

    cols = {
        "visibilidad_actual": vis,
        "visibilidad_lag_1h": vis.shift(1),
        "visibilidad_lag_3h": vis.shift(3),
        "visibilidad_lag_6h": vis.shift(6),
        "temperatura_2m": t2m,
        "depresion_punto_rocio": depression,
        "humedad_relativa": pd.Series(
            relative_humidity(t2m.to_numpy(), d2m.to_numpy()), index=f.index
        ),
        "velocidad_viento_10m": f["ws10_mps"],
        "presion_superficie": press,
        "gradiente_termico_950_sfc": f["t950_c"] - t2m,
        "cobertura_nubes_bajas": f["lcc_frac"],
        "tendencia_depresion_rocio_3h": depression - depression.shift(3),
        "tendencia_depresion_rocio_6h": depression - depression.shift(6),
        "tasa_enfriamiento_3h": (t2m.shift(3) - t2m) / 3.0,
        "tasa_enfriamiento_6h": (t2m.shift(6) - t2m) / 6.0,
        "tendencia_presion_3h": press - press.shift(3),
    }
    elev = solar_elevation(series.meta.lat_deg, series.meta.lon_deg, ts)
    days = ts.astype("datetime64[D]")
    doy = ((days - days.astype("datetime64[Y]")) / np.timedelta64(1, "D")).astype(
        np.float64
    ) + 1.0
    cols["angulo_solar"] = pd.Series(elev, index=f.index)
    cols["dia_del_ano"] = pd.Series(doy, index=f.index)
    cols["is_night"] = pd.Series((elev < 0.0).astype(np.float64), index=f.index)

    X = np.column_stack([np.asarray(cols[name], dtype=np.float64) for name in FEATURE_NAMES])

    vis_future = vis.shift(-horizon_h)
    reported_future = f["metar_reported"].astype(bool).shift(-horizon_h, fill_value=False)
    label = ((vis_future < FOG_VISIBILITY_KM) & reported_future).to_numpy()

    keep = slice(_MAX_LAG_H, n - horizon_h)
    X = X[keep]
    y = label[keep].astype(np.int64)
    ts = ts[keep]
    if np.isnan(X).any():
        raise AssertionError("feature matrix contains NaN after edge trimming")

    return FeatureDataset(
        schema=FEATURE_NAMES,
        timestamps=ts,
        X=X,
        y=y,
        horizon_h=horizon_h,
        site=series.meta.icao,
    )


def split_by_period(ds, train_range, test_range):
    """Partition rows by timestamp into (train, test).

    Ranges are half-open [start, end) pairs of anything pandas can parse.
    They must not intersect; order within each partition is preserved.
    """
    t0, t1 = (np.datetime64(pd.Timestamp(v), "s") for v in train_range)
    s0, s1 = (np.datetime64(pd.Timestamp(v), "s") for v in test_range)
    if t0 < t1 and s0 < s1 and t0 < s1 and s0 < t1:
        raise OverlappingRanges(
            f"train {train_range} and test {test_range} ranges overlap"
        )
    train_mask = (ds.timestamps >= t0) & (ds.timestamps < t1)
    test_mask = (ds.timestamps >= s0) & (ds.timestamps < s1)
    return ds.subset(train_mask), ds.subset(test_mask)
