"""Experiment orchestration: one frozen model, many sites.

A run ingests every configured site, trains on the single train site's
training window, freezes the model and scaler to disk, then evaluates the
holdout window and every transfer site with those frozen artifacts. The
transfer path never fits anything; the artifact files are hashed before and
after transfer evaluation and a mismatch aborts the run.

Configuration is one JSON document. Relative paths inside it (site data
files, output_dir) resolve against the directory containing the config file,
so a config can travel with its data.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field, replace

import pandas as pd

from .baselines import (
    climatology_baseline,
    persistence_baseline,
    train_logistic,
)
from .era5 import load_era5_csv
from .errors import ConfigError, InternalError, OverlappingRanges
from .explain import global_importance, write_importance_csv
from .features import assemble_features, split_by_period
from .gbdt import Hyperparams, save_model, train_gbdt
from .metar import load_asos_csv
from .metrics import (
    classification_report,
    roc_auc,
    write_pr_csv,
    write_report_json,
    write_roc_csv,
)
from .scaling import apply_scaler, fit_scaler
from .series import SiteMeta, build_hourly_series

ROLES = ("train", "transfer")

# CI-scale tree count; Hyperparams itself defaults to the production 1000.
DEFAULT_EXPERIMENT_TREES = 300


@dataclass(frozen=True)
class SiteConfig:
    icao: str
    lat: float
    lon: float
    elevation: float
    metar_path: str
    era5_path: str
    role: str = "transfer"

    def validate(self):
        if not self.icao:
            raise ConfigError("site icao must be non-empty")
        if self.role not in ROLES:
            raise ConfigError(f"site {self.icao}: role must be one of {ROLES}, got {self.role!r}")
        if not -90.0 <= self.lat <= 90.0:
            raise ConfigError(f"site {self.icao}: latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ConfigError(f"site {self.icao}: longitude {self.lon} outside [-180, 180]")
        return self

    def meta(self):
        return SiteMeta(
            icao=self.icao, lat_deg=self.lat, lon_deg=self.lon, elevation_m=self.elevation
        )

    @classmethod
    def from_dict(cls, d, base_dir="."):
        d = dict(d)
        unknown = set(d) - set(_SITE_FIELDS)
        if unknown:
            raise ConfigError(f"unknown site keys: {sorted(unknown)}")
        try:
            site = cls(
                icao=str(d["icao"]),
                lat=float(d["lat"]),
                lon=float(d["lon"]),
                elevation=float(d.get("elevation", 0.0)),
                metar_path=os.path.join(base_dir, d["metar_path"]),
                era5_path=os.path.join(base_dir, d["era5_path"]),
                role=str(d.get("role", "transfer")),
            )
        except KeyError as exc:
            raise ConfigError(f"site entry missing key {exc.args[0]!r}") from exc
        return site.validate()


_SITE_FIELDS = ("icao", "lat", "lon", "elevation", "metar_path", "era5_path", "role")


@dataclass(frozen=True)
class ExperimentConfig:
    sites: tuple
    train_range: tuple
    test_range: tuple
    output_dir: str
    horizon_h: int = 2
    hyperparams: Hyperparams = field(
        default_factory=lambda: Hyperparams(n_estimators=DEFAULT_EXPERIMENT_TREES)
    )
    threshold: float = 0.5
    seed: int = 0

    def validate(self):
        if not self.sites:
            raise ConfigError("config needs at least one site")
        n_train = sum(1 for s in self.sites if s.role == "train")
        if n_train != 1:
            raise ConfigError(f"exactly one site must have role 'train', got {n_train}")
        icaos = [s.icao for s in self.sites]
        if len(set(icaos)) != len(icaos):
            raise ConfigError(f"duplicate site icao in {icaos}")
        for s in self.sites:
            s.validate()
        if not isinstance(self.horizon_h, int) or self.horizon_h < 1:
            raise ConfigError(f"horizon_h must be a positive integer, got {self.horizon_h!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold!r}")
        if len(self.train_range) != 2 or len(self.test_range) != 2:
            raise ConfigError("train_range and test_range must be [start, end] pairs")
        try:
            t0, t1 = (pd.Timestamp(v) for v in self.train_range)
            s0, s1 = (pd.Timestamp(v) for v in self.test_range)
        except ValueError as exc:
            raise ConfigError(f"unparseable date range: {exc}") from exc
        if not (t0 < t1 and s0 < s1):
            raise ConfigError("each range must run start < end")
        if t0 < s1 and s0 < t1:
            raise OverlappingRanges(
                f"train {self.train_range} and test {self.test_range} ranges overlap"
            )
        self.hyperparams.validate()
        return self

    @property
    def train_site(self):
        return next(s for s in self.sites if s.role == "train")

    @property
    def transfer_sites(self):
        return tuple(s for s in self.sites if s.role == "transfer")

    @classmethod
    def from_dict(cls, doc, base_dir="."):
        doc = dict(doc)
        try:
            sites = tuple(SiteConfig.from_dict(s, base_dir) for s in doc["sites"])
            train_range = tuple(str(v) for v in doc["train_range"])
            test_range = tuple(str(v) for v in doc["test_range"])
            output_dir = os.path.join(base_dir, doc["output_dir"])
        except KeyError as exc:
            raise ConfigError(f"config missing key {exc.args[0]!r}") from exc
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        hp_doc = dict(doc.get("hyperparams", {}))
        hp_doc.setdefault("n_estimators", DEFAULT_EXPERIMENT_TREES)
        hp_doc.setdefault("seed", int(doc.get("seed", 0)))
        try:
            hp = Hyperparams.from_dict(hp_doc)
        except TypeError as exc:
            raise ConfigError(f"malformed hyperparams: {exc}") from exc
        cfg = cls(
            sites=sites,
            train_range=train_range,
            test_range=test_range,
            output_dir=output_dir,
            horizon_h=int(doc.get("horizon_h", 2)),
            hyperparams=hp,
            threshold=float(doc.get("threshold", 0.5)),
            seed=int(doc.get("seed", 0)),
        )
        return cfg.validate()

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))

    def override(self, seed=None, output_dir=None, horizon=None, threshold=None):
        """Apply CLI-level overrides; flags win over the config document."""
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed, hyperparams=replace(cfg.hyperparams, seed=seed))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        if horizon is not None:
            cfg = replace(cfg, horizon_h=horizon)
        if threshold is not None:
            cfg = replace(cfg, threshold=threshold)
        return cfg.validate()


@dataclass(frozen=True)
class IngestStats:
    metar_rows: int
    metar_rejected: int
    era5_rows: int
    era5_rejected: int


def ingest_site(site):
    """Load one site's METAR + reanalysis files into an hourly series."""
    with open(site.metar_path) as fh:
        metars, metar_errs = load_asos_csv(fh)
    with open(site.era5_path) as fh:
        era5, era5_errs = load_era5_csv(fh)
    series = build_hourly_series(metars, era5, site.meta())
    stats = IngestStats(
        metar_rows=len(metars),
        metar_rejected=len(metar_errs),
        era5_rows=len(era5),
        era5_rejected=len(era5_errs),
    )
    return series, stats


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _site_evaluation(model, scaler, ds, threshold):
    scaled = apply_scaler(scaler, ds)
    scores = model.predict_proba(scaled.X)
    report = classification_report(scores, ds.y, threshold)
    importance = global_importance(model, scaled)
    return scores, report, importance


def _baseline_aucs(train_raw, test_raw, test_scaled, logistic):
    pers = persistence_baseline(test_raw)
    out = {
        "persistence_auc": roc_auc(pers.binary, test_raw.y),
        "persistence_continuous_auc": roc_auc(pers.continuous, test_raw.y),
        "climatology_auc": roc_auc(climatology_baseline(train_raw, test_raw), test_raw.y),
    }
    if logistic is not None:
        out["logistic_auc"] = roc_auc(logistic.scores(test_scaled), test_raw.y)
    return {k: float(v) for k, v in out.items()}


@dataclass(frozen=True)
class SiteResult:
    site: SiteConfig
    report: object
    importance: object
    baselines: dict


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    results: dict  # icao -> SiteResult
    model_path: str
    scaler_path: str
    summary_path: str
    audit: dict

    @property
    def train_result(self):
        return self.results[self.config.train_site.icao]


def run_experiment(config):
    """Train once, evaluate everywhere, write the artifact bundle.

    Returns an ExperimentResult; everything it contains is also on disk
    under config.output_dir. Rerunning with the same config and seed
    reproduces every artifact byte for byte.
    """
    config.validate()
    out = config.output_dir
    os.makedirs(out, exist_ok=True)

    series = {}
    ingest = {}
    for site in config.sites:
        series[site.icao], ingest[site.icao] = ingest_site(site)

    datasets = {
        icao: assemble_features(s, horizon_h=config.horizon_h) for icao, s in series.items()
    }

    train_icao = config.train_site.icao
    train_ds, holdout_ds = split_by_period(
        datasets[train_icao], config.train_range, config.test_range
    )
    scaler = fit_scaler(train_ds)
    train_scaled = apply_scaler(scaler, train_ds)
    model = train_gbdt(train_scaled, config.hyperparams)
    logistic = train_logistic(train_scaled)

    model_path = os.path.join(out, "model.json")
    scaler_path = os.path.join(out, "scaler.json")
    save_model(model, model_path)
    scaler.save(scaler_path)
    hashes_before = {"model": _sha256(model_path), "scaler": _sha256(scaler_path)}

    results = {}
    evaluations = [(config.train_site, holdout_ds)]
    evaluations += [(site, datasets[site.icao]) for site in config.transfer_sites]
    for site, ds in evaluations:
        scores, report, importance = _site_evaluation(model, scaler, ds, config.threshold)
        baselines = _baseline_aucs(train_ds, ds, apply_scaler(scaler, ds), logistic)
        results[site.icao] = SiteResult(
            site=site, report=report, importance=importance, baselines=baselines
        )
        tag = site.icao.lower()
        write_report_json(report, os.path.join(out, f"report_{tag}.json"))
        write_roc_csv(report, os.path.join(out, f"roc_{tag}.csv"))
        write_pr_csv(report, os.path.join(out, f"pr_{tag}.csv"))
        write_importance_csv(importance, os.path.join(out, f"importance_{tag}.csv"))

    hashes_after = {"model": _sha256(model_path), "scaler": _sha256(scaler_path)}
    if hashes_before != hashes_after:
        raise InternalError(
            "frozen artifacts changed during transfer evaluation: "
            f"{hashes_before} -> {hashes_after}"
        )
    audit = {
        "model_sha256_before": hashes_before["model"],
        "model_sha256_after": hashes_after["model"],
        "scaler_sha256_before": hashes_before["scaler"],
        "scaler_sha256_after": hashes_after["scaler"],
    }

    summary = {
        "horizon_h": config.horizon_h,
        "threshold": config.threshold,
        "seed": config.seed,
        "hyperparams": config.hyperparams.to_dict(),
        "train_range": list(config.train_range),
        "test_range": list(config.test_range),
        "leakage_audit": audit,
        "sites": {},
    }
    for site in config.sites:
        icao = site.icao
        res = results[icao]
        rep = res.report
        summary["sites"][icao] = {
            "role": site.role,
            "rows": len(datasets[icao]),
            "metar_rejected": ingest[icao].metar_rejected,
            "era5_rejected": ingest[icao].era5_rejected,
            "base_rate": rep.base_rate,
            "auc": rep.auc,
            "auprc": rep.auprc,
            "f1": rep.f1,
            "mcc": rep.mcc,
            "top_features": [e.feature for e in res.importance.entries[:3]],
            **res.baselines,
        }
    summary_path = os.path.join(out, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return ExperimentResult(
        config=config,
        results=results,
        model_path=model_path,
        scaler_path=scaler_path,
        summary_path=summary_path,
        audit=audit,
    )


# ---------------------------------------------------------------------------
# horizon sweep


@dataclass(frozen=True)
class SweepEntry:
    horizon: int
    report: object
    importance: object


@dataclass(frozen=True)
class SweepResult:
    entries: tuple

    def rows(self):
        return [
            {
                "horizon": e.horizon,
                "auc": e.report.auc,
                "auprc": e.report.auprc,
                "mcc": e.report.mcc,
                "f1": e.report.f1,
            }
            for e in self.entries
        ]


def horizon_sweep(config, horizons):
    """Refit and re-evaluate the train site at each lead time.

    Transfer sites are ignored here; the sweep isolates how skill decays
    with horizon on the site the model is fitted to.
    """
    config.validate()
    if not horizons:
        raise ConfigError("horizons must be non-empty")
    for h in horizons:
        if not isinstance(h, int) or h < 1:
            raise ConfigError(f"horizons must be positive integers, got {h!r}")

    train_series, _ = ingest_site(config.train_site)
    entries = []
    for h in horizons:
        ds = assemble_features(train_series, horizon_h=h)
        train_ds, holdout_ds = split_by_period(ds, config.train_range, config.test_range)
        scaler = fit_scaler(train_ds)
        model = train_gbdt(apply_scaler(scaler, train_ds), config.hyperparams)
        _, report, importance = _site_evaluation(model, scaler, holdout_ds, config.threshold)
        entries.append(SweepEntry(horizon=h, report=report, importance=importance))
    return SweepResult(entries=tuple(entries))


def write_sweep_csv(result, path):
    lines = ["horizon,auc,auprc,mcc,f1"]
    for row in result.rows():
        lines.append(
            f"{row['horizon']},{row['auc']!s},{row['auprc']!s},{row['mcc']!s},{row['f1']!s}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_curves(report, directory):
    """Write the report's ROC and PR point lists as plot-ready CSVs."""
    os.makedirs(directory, exist_ok=True)
    roc_path = os.path.join(directory, "roc.csv")
    pr_path = os.path.join(directory, "pr.csv")
    write_roc_csv(report, roc_path)
    write_pr_csv(report, pr_path)
    return {"roc": roc_path, "pr": pr_path}
