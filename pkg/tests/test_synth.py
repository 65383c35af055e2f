import numpy as np
import pytest

from fogcast.era5 import load_era5_csv
from fogcast.errors import InvalidSpec
from fogcast.metar import load_asos_csv
from fogcast.series import SERIES_COLUMNS, build_hourly_series
from fogcast.solar import solar_elevation
from fogcast.synth import (
    MIN_DAYS,
    SyntheticSiteSpec,
    fog_rate,
    synthesize_site,
    write_asos_csv,
    write_era5_csv,
    write_site_files,
)

SCL = dict(lat_deg=-33.4, lon_deg=-70.8)


def spec(n_days=90, seed=0, fog_propensity=0.6, regime="radiative", **site):
    site = {**SCL, **site}
    return SyntheticSiteSpec(
        n_days=n_days, seed=seed, fog_propensity=fog_propensity, regime=regime, **site
    )


class TestSpecValidation:
    def test_valid_spec_roundtrips(self):
        s = spec()
        assert s.validate() is s

    @pytest.mark.parametrize(
        "kw",
        [
            dict(lat_deg=91.0),
            dict(lat_deg=-90.5),
            dict(lon_deg=180.5),
            dict(n_days=MIN_DAYS - 1),
            dict(n_days=0),
            dict(fog_propensity=-0.01),
            dict(fog_propensity=1.01),
            dict(regime="advective"),
        ],
    )
    def test_bad_field_rejected(self, kw):
        with pytest.raises(InvalidSpec):
            spec(**kw).validate()


class TestDeterminism:
    def test_same_spec_same_series(self):
        a = synthesize_site(spec(seed=3))
        b = synthesize_site(spec(seed=3))
        assert a.frame.equals(b.frame)
        assert a.meta == b.meta

    def test_seed_changes_series(self):
        a = synthesize_site(spec(seed=3))
        b = synthesize_site(spec(seed=4))
        assert not a.frame["visibility_km"].equals(b.frame["visibility_km"])


class TestSeriesShape:
    def test_grid_and_columns(self):
        s = synthesize_site(spec(n_days=45))
        assert list(s.frame.columns) == list(SERIES_COLUMNS)
        assert len(s.frame) == 45 * 24
        deltas = np.diff(s.frame.index.values.astype("datetime64[s]").astype("int64"))
        assert np.all(deltas == 3600)

    def test_physical_ranges(self):
        f = synthesize_site(spec(n_days=365, seed=1)).frame
        assert f["visibility_km"].between(0.0, 20.0).all()
        assert (f["ws10_mps"] >= 0).all()
        assert f["sp_hpa"].between(980.0, 1045.0).all()
        assert f["lcc_frac"].between(0.0, 1.0).all()
        assert (f["d2m_c"] < f["t2m_c"]).all()
        assert f["metar_reported"].all()

    def test_fog_forms_at_night_in_calm_air(self):
        s = synthesize_site(spec(n_days=3 * 365, seed=7))
        f = s.frame
        fog = f["visibility_km"] < 1.0
        assert fog.any()
        elev = solar_elevation(
            s.meta.lat_deg, s.meta.lon_deg, f.index.values.astype("datetime64[s]")
        )
        onsets = fog & ~fog.shift(fill_value=False)
        assert (elev[onsets.to_numpy()] < 0).all()
        assert (f.loc[onsets, "ws10_mps"] < 3.0).all()

    def test_inversion_strengthens_during_fog(self):
        f = synthesize_site(spec(n_days=365, seed=2)).frame
        gradient = f["t950_c"] - f["t2m_c"]
        fog = f["visibility_km"] < 1.0
        assert gradient[fog].mean() > gradient[~fog].mean()


class TestBaseRates:
    # Bands were fixed by Monte-Carlo over seeds before anything downstream
    # was built; the seeds here were measured comfortably inside them.
    @pytest.mark.parametrize("seed", [0, 3, 7])
    def test_radiative_band(self, seed):
        s = synthesize_site(spec(n_days=3 * 365, seed=seed))
        assert 0.01 <= fog_rate(s) <= 0.08

    @pytest.mark.parametrize("seed", [0, 2])
    def test_rare_event_band(self, seed):
        s = synthesize_site(spec(n_days=6 * 365, seed=seed, regime="rare_event"))
        assert 0.0001 <= fog_rate(s) <= 0.001

    def test_zero_propensity_never_fogs(self):
        s = synthesize_site(spec(n_days=365, seed=5, fog_propensity=0.0))
        assert fog_rate(s) == 0.0


class TestWriters:
    def test_round_trip_through_loaders(self, tmp_path):
        series = synthesize_site(spec(n_days=40, seed=6), icao="SYNT")
        paths = write_site_files(series, tmp_path)
        with open(paths["metar"]) as fh:
            metars, metar_errs = load_asos_csv(fh)
        with open(paths["era5"]) as fh:
            era5, era5_errs = load_era5_csv(fh)
        assert not metar_errs and not era5_errs
        assert len(metars) == len(series.frame)
        assert len(era5) == len(series.frame)

        rebuilt = build_hourly_series(metars, era5, series.meta)
        assert len(rebuilt.frame) == len(series.frame)
        # unit conversions round-trip through the CSV text within float noise
        np.testing.assert_allclose(
            rebuilt.frame["visibility_km"], series.frame["visibility_km"], atol=1e-6
        )
        np.testing.assert_allclose(rebuilt.frame["t2m_c"], series.frame["t2m_c"], atol=1e-6)
        np.testing.assert_allclose(
            rebuilt.frame["ws10_mps"], series.frame["ws10_mps"], atol=1e-6
        )
        assert rebuilt.frame["metar_reported"].all()

    def test_missing_fraction_drops_rows(self, tmp_path):
        series = synthesize_site(spec(n_days=60, seed=6))
        path = tmp_path / "gappy.csv"
        n = write_asos_csv(series, path, missing_fraction=0.2, seed=1)
        assert n < len(series.frame)
        with open(path) as fh:
            records, errs = load_asos_csv(fh)
        assert not errs
        assert len(records) == n
        # the first hour always reports so the overlap window opens there
        assert records[0].timestamp.strftime("%Y-%m-%d %H:%M") == "2005-01-01 00:00"
        write_era5_csv(series, tmp_path / "era5.csv")
        with open(tmp_path / "era5.csv") as fh:
            era5, _ = load_era5_csv(fh)
        rebuilt = build_hourly_series(records, era5, series.meta)
        reported = rebuilt.frame["metar_reported"]
        assert not reported.all()
        assert reported.iloc[0]

    def test_era5_writer_is_exact(self, tmp_path):
        series = synthesize_site(spec(n_days=35, seed=9))
        path = tmp_path / "era5.csv"
        write_era5_csv(series, path)
        with open(path) as fh:
            records, errs = load_era5_csv(fh)
        assert not errs
        got = np.array([r.t2m_c for r in records])
        np.testing.assert_array_equal(got, series.frame["t2m_c"].to_numpy())
