"""Command-line surface wiring the pipeline end to end.

Every command reads the same JSON experiment config; the common flags
--seed/--out/--horizon/--threshold override the corresponding config fields.
Exit codes: 0 success, 2 configuration problem, 3 unreadable or malformed
data, 4 violated internal invariant.
"""

import argparse
import json
import os
import sys

from .errors import ConfigError, DataError, FogcastError
from .experiment import (
    ExperimentConfig,
    emit_curves,
    horizon_sweep,
    ingest_site,
    run_experiment,
    write_sweep_csv,
)
from .explain import global_importance, write_importance_csv
from .features import assemble_features, split_by_period
from .gbdt import load_model, save_model, train_gbdt
from .era5 import load_era5_csv
from .metar import load_asos_csv
from .metrics import (
    calibrate_threshold,
    classification_report,
    write_report_json,
)
from .scaling import FeatureScaler, apply_scaler, fit_scaler
from .synth import SyntheticSiteSpec, fog_rate, synthesize_site, write_site_files

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _load_config(args):
    if not args.config:
        raise ConfigError("this command requires --config")
    cfg = ExperimentConfig.from_json(args.config)
    return cfg.override(
        seed=args.seed,
        output_dir=args.out,
        horizon=args.horizon,
        threshold=args.threshold,
    )


def _say(msg):
    print(msg)


# ---------------------------------------------------------------------------
# ingestion commands: QC gates that load and report without training


def cmd_ingest_metar(args):
    cfg = _load_config(args)
    for site in cfg.sites:
        with open(site.metar_path) as fh:
            records, errors = load_asos_csv(fh)
        total = len(records) + len(errors)
        pct = 100.0 * len(errors) / total if total else 0.0
        _say(f"{site.icao}: {len(records)} reports, {len(errors)} rejected ({pct:.2f}%)")
    return EXIT_OK


def cmd_ingest_era5(args):
    cfg = _load_config(args)
    for site in cfg.sites:
        with open(site.era5_path) as fh:
            records, errors = load_era5_csv(fh)
        total = len(records) + len(errors)
        pct = 100.0 * len(errors) / total if total else 0.0
        _say(f"{site.icao}: {len(records)} rows, {len(errors)} rejected ({pct:.2f}%)")
    return EXIT_OK


def cmd_featurize(args):
    cfg = _load_config(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    for site in cfg.sites:
        series, _ = ingest_site(site)
        ds = assemble_features(series, horizon_h=cfg.horizon_h)
        tag = site.icao.lower()
        csv_path = os.path.join(cfg.output_dir, f"features_{tag}.csv")
        ds.to_csv(csv_path, os.path.join(cfg.output_dir, f"features_{tag}.meta.json"))
        _say(f"{site.icao}: {len(ds)} rows, base rate {ds.base_rate:.4f} -> {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# model lifecycle commands sharing artifacts under the output directory


def _train_site_datasets(cfg):
    series, _ = ingest_site(cfg.train_site)
    ds = assemble_features(series, horizon_h=cfg.horizon_h)
    return split_by_period(ds, cfg.train_range, cfg.test_range)


def _artifact_paths(cfg):
    return os.path.join(cfg.output_dir, "model.json"), os.path.join(
        cfg.output_dir, "scaler.json"
    )


def _load_artifacts(cfg):
    model_path, scaler_path = _artifact_paths(cfg)
    return load_model(model_path), FeatureScaler.load(scaler_path)


def cmd_train(args):
    cfg = _load_config(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    train_ds, _ = _train_site_datasets(cfg)
    scaler = fit_scaler(train_ds)
    model = train_gbdt(apply_scaler(scaler, train_ds), cfg.hyperparams)
    model_path, scaler_path = _artifact_paths(cfg)
    save_model(model, model_path)
    scaler.save(scaler_path)
    _say(
        f"trained {cfg.hyperparams.n_estimators} trees on {len(train_ds)} rows "
        f"({cfg.train_site.icao}, horizon {cfg.horizon_h}h) -> {model_path}"
    )
    return EXIT_OK


def cmd_evaluate(args):
    cfg = _load_config(args)
    model, scaler = _load_artifacts(cfg)
    _, holdout = _train_site_datasets(cfg)
    scores = model.predict_proba(apply_scaler(scaler, holdout).X)
    report = classification_report(scores, holdout.y, cfg.threshold)
    tag = cfg.train_site.icao.lower()
    write_report_json(report, os.path.join(cfg.output_dir, f"report_{tag}.json"))
    emit_curves(report, cfg.output_dir)
    _say(
        f"{cfg.train_site.icao} holdout: AUC {report.auc:.4f} AUPRC {report.auprc:.4f} "
        f"F1 {report.f1:.4f} at threshold {report.threshold}"
    )
    return EXIT_OK


def cmd_transfer(args):
    cfg = _load_config(args)
    if not cfg.transfer_sites:
        raise ConfigError("config has no transfer sites")
    model, scaler = _load_artifacts(cfg)
    for site in cfg.transfer_sites:
        series, _ = ingest_site(site)
        ds = assemble_features(series, horizon_h=cfg.horizon_h)
        scores = model.predict_proba(apply_scaler(scaler, ds).X)
        report = classification_report(scores, ds.y, cfg.threshold)
        tag = site.icao.lower()
        write_report_json(report, os.path.join(cfg.output_dir, f"report_{tag}.json"))
        _say(f"{site.icao} zero-shot: AUC {report.auc:.4f} AUPRC {report.auprc:.4f}")
    return EXIT_OK


def cmd_explain(args):
    cfg = _load_config(args)
    model, scaler = _load_artifacts(cfg)
    for site in cfg.sites:
        series, _ = ingest_site(site)
        ds = assemble_features(series, horizon_h=cfg.horizon_h)
        if site.role == "train":
            _, ds = split_by_period(ds, cfg.train_range, cfg.test_range)
        ranking = global_importance(model, apply_scaler(scaler, ds))
        tag = site.icao.lower()
        write_importance_csv(ranking, os.path.join(cfg.output_dir, f"importance_{tag}.csv"))
        top = ", ".join(e.feature for e in ranking.entries[:3])
        _say(f"{site.icao}: top features {top}")
    return EXIT_OK


def cmd_calibrate(args):
    cfg = _load_config(args)
    model, scaler = _load_artifacts(cfg)
    _, holdout = _train_site_datasets(cfg)
    scores = model.predict_proba(apply_scaler(scaler, holdout).X)
    cal = calibrate_threshold(scores, holdout.y, "max_f1")
    default = classification_report(scores, holdout.y, cfg.threshold)
    doc = {
        "objective": "max_f1",
        "threshold": cal.threshold,
        "f1": cal.report.f1,
        "default_threshold": cfg.threshold,
        "default_f1": default.f1,
    }
    with open(os.path.join(cfg.output_dir, "calibration.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _say(
        f"max_f1 threshold {cal.threshold:.4f} (F1 {cal.report.f1:.4f}) vs "
        f"{cfg.threshold} (F1 {default.f1:.4f})"
    )
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load_config(args)
    try:
        horizons = [int(tok) for tok in args.horizons.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --horizons value {args.horizons!r}") from exc
    result = horizon_sweep(cfg, horizons)
    os.makedirs(cfg.output_dir, exist_ok=True)
    write_sweep_csv(result, os.path.join(cfg.output_dir, "sweep.csv"))
    for entry in result.entries:
        write_importance_csv(
            entry.importance,
            os.path.join(cfg.output_dir, f"importance_h{entry.horizon}.csv"),
        )
        _say(f"horizon {entry.horizon}h: AUC {entry.report.auc:.4f} F1 {entry.report.f1:.4f}")
    return EXIT_OK


def cmd_synth(args):
    doc = {}
    if args.config:
        with open(args.config) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"synth config is not valid JSON: {exc}") from exc
    def pick(flag, key, fallback):
        return flag if flag is not None else doc.get(key, fallback)

    spec = SyntheticSiteSpec(
        lat_deg=float(pick(args.lat, "lat_deg", -33.4)),
        lon_deg=float(pick(args.lon, "lon_deg", -70.8)),
        n_days=int(pick(args.days, "n_days", 365)),
        seed=int(pick(args.seed, "seed", 0)),
        fog_propensity=float(pick(args.propensity, "fog_propensity", 0.6)),
        regime=str(pick(args.regime, "regime", "radiative")),
    )
    out = args.out or doc.get("output_dir")
    if not out:
        raise ConfigError("synth requires --out (or output_dir in the config)")
    icao = args.icao or doc.get("icao", "SYNT")
    series = synthesize_site(spec, icao=icao)
    paths = write_site_files(
        series, out, missing_fraction=args.missing_fraction, seed=spec.seed
    )
    _say(
        f"{icao}: {spec.n_days} days, fog rate {fog_rate(series):.4%} -> "
        f"{paths['metar']}, {paths['era5']}"
    )
    return EXIT_OK


def cmd_run(args):
    cfg = _load_config(args)
    result = run_experiment(cfg)
    for site in cfg.sites:
        rep = result.results[site.icao].report
        _say(f"{site.icao} ({site.role}): AUC {rep.auc:.4f} AUPRC {rep.auprc:.4f}")
    _say(f"artifacts in {cfg.output_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fogcast",
        description="Coordinate-free fog nowcasting pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="override config output_dir")
        p.add_argument("--horizon", type=int, help="override forecast horizon (hours)")
        p.add_argument("--threshold", type=float, help="override decision threshold")
        p.set_defaults(func=func)
        return p

    add("ingest-metar", cmd_ingest_metar, "parse METAR CSVs and report QC counts")
    add("ingest-era5", cmd_ingest_era5, "parse reanalysis CSVs and report QC counts")
    add("featurize", cmd_featurize, "write per-site feature datasets")
    add("train", cmd_train, "fit scaler + model on the train site")
    add("evaluate", cmd_evaluate, "score the train-site holdout with saved artifacts")
    add("transfer", cmd_transfer, "zero-shot evaluation of every transfer site")
    add("explain", cmd_explain, "write per-site feature importance rankings")
    add("calibrate", cmd_calibrate, "pick the F1-optimal decision threshold")
    p_sweep = add("sweep", cmd_sweep, "refit across forecast horizons")
    p_sweep.add_argument("--horizons", default="2,3,6", help="comma-separated hours")
    p_synth = add("synth", cmd_synth, "generate a synthetic site's data files")
    p_synth.add_argument("--lat", type=float, help="site latitude (deg)")
    p_synth.add_argument("--lon", type=float, help="site longitude (deg)")
    p_synth.add_argument("--days", type=int, help="series length in days")
    p_synth.add_argument("--propensity", type=float, help="fog propensity in [0, 1]")
    p_synth.add_argument("--regime", choices=["radiative", "rare_event"])
    p_synth.add_argument("--icao", help="station identifier for the files")
    p_synth.add_argument(
        "--missing-fraction",
        dest="missing_fraction",
        type=float,
        default=0.0,
        help="fraction of METAR rows to drop",
    )
    add("run", cmd_run, "full experiment: ingest, train, evaluate, transfer")

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FogcastError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
