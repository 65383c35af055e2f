"""Coordinate-free airport fog nowcasting.

Ingests METAR visibility and reanalysis predictors onto a shared hourly
grid, derives physics-oriented features (no geographic coordinates), trains
a gradient-boosted classifier from scratch, explains it with exact
path-dependent attributions, and evaluates zero-shot transfer to sites the
model has never seen.
"""

from .baselines import (
    climatology_baseline,
    fit_climatology,
    persistence_baseline,
    train_logistic,
)
from .era5 import load_era5_csv
from .errors import ConfigError, DataError, FogcastError, InternalError
from .experiment import (
    ExperimentConfig,
    SiteConfig,
    emit_curves,
    horizon_sweep,
    run_experiment,
)
from .features import FEATURE_NAMES, FeatureDataset, assemble_features, split_by_period
from .gbdt import (
    GradientBoostedClassifier,
    Hyperparams,
    compute_scale_pos_weight,
    load_model,
    save_model,
    train_gbdt,
)
from .explain import (
    ShapExplanation,
    global_importance,
    shap_matrix,
    shap_values,
)
from .metar import load_asos_csv, parse_metar, parse_metar_lines
from .metrics import (
    EvalReport,
    average_precision,
    calibrate_threshold,
    classification_report,
    roc_auc,
)
from .scaling import FeatureScaler, apply_scaler, fit_scaler
from .series import SiteMeta, SiteSeries, build_hourly_series
from .solar import SolarGeometry, solar_declination, solar_elevation
from .synth import SyntheticSiteSpec, synthesize_site, write_site_files

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "EvalReport",
    "ExperimentConfig",
    "FEATURE_NAMES",
    "FeatureDataset",
    "FeatureScaler",
    "FogcastError",
    "GradientBoostedClassifier",
    "Hyperparams",
    "InternalError",
    "ShapExplanation",
    "SiteConfig",
    "SiteMeta",
    "SiteSeries",
    "SolarGeometry",
    "SyntheticSiteSpec",
    "apply_scaler",
    "assemble_features",
    "average_precision",
    "build_hourly_series",
    "calibrate_threshold",
    "classification_report",
    "climatology_baseline",
    "compute_scale_pos_weight",
    "emit_curves",
    "fit_climatology",
    "fit_scaler",
    "global_importance",
    "horizon_sweep",
    "load_asos_csv",
    "load_era5_csv",
    "load_model",
    "parse_metar",
    "parse_metar_lines",
    "persistence_baseline",
    "roc_auc",
    "run_experiment",
    "save_model",
    "shap_matrix",
    "shap_values",
    "solar_declination",
    "solar_elevation",
    "split_by_period",
    "synthesize_site",
    "train_gbdt",
    "train_logistic",
    "write_site_files",
]
