"""Leakage-proof standardization, fitted on the training partition only."""

import json
from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import CorruptModelFile, EmptyDataset, SchemaMismatch
from .validation import check_fitted, check_matrix

# a column with less spread than this is treated as constant
_DEGENERATE_STD = 1e-12


class FeatureScaler(BaseEstimator, TransformerMixin):
    """Columnwise (x - mean)/std with population std (denominator N).

    Degenerate (constant) columns store std 1.0, so transforming maps them
    to zero instead of blowing up. The fitted statistics are frozen: apply
    to any later dataset without refitting.
    """

    def fit(self, X, y=None):
        X = check_matrix(X, name="X")
        if X.shape[0] == 0:
            raise EmptyDataset("cannot fit a scaler on zero rows")
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)  # population std, ddof=0
        self.scale_ = np.where(std < _DEGENERATE_STD, 1.0, std)
        self.fitted_on_ = ""
        return self

    def transform(self, X):
        check_fitted(self, "mean_")
        X = check_matrix(X, n_features=self.n_features_in_, name="X")
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_fitted(self, "mean_")
        X = check_matrix(X, n_features=self.n_features_in_, name="X")
        return X * self.scale_ + self.mean_

    def save(self, path):
        check_fitted(self, "mean_")
        payload = {
            "means": self.mean_.tolist(),
            "stds": self.scale_.tolist(),
            "fitted_on": self.fitted_on_,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                payload = json.load(fh)
            means = np.asarray(payload["means"], dtype=np.float64)
            stds = np.asarray(payload["stds"], dtype=np.float64)
            fitted_on = payload["fitted_on"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorruptModelFile(f"bad scaler file {path}: {exc}") from exc
        if means.shape != stds.shape or means.ndim != 1:
            raise CorruptModelFile(f"bad scaler file {path}: shape mismatch")
        scaler = cls()
        scaler.mean_ = means
        scaler.scale_ = stds
        scaler.n_features_in_ = means.shape[0]
        scaler.fitted_on_ = fitted_on
        return scaler


def fit_scaler(train):
    """Fit a FeatureScaler on a FeatureDataset's matrix (train only)."""
    if len(train) == 0:
        raise EmptyDataset("cannot fit a scaler on an empty dataset")
    scaler = FeatureScaler().fit(train.X)
    ts = train.timestamps
    scaler.fitted_on_ = (
        f"{train.site} {np.datetime_as_string(ts[0], unit='h')}"
        f"..{np.datetime_as_string(ts[-1], unit='h')}"
    )
    return scaler


def apply_scaler(scaler, ds):
    """Return a scaled copy of the dataset; the scaler is not modified."""
    if scaler.n_features_in_ != ds.X.shape[1]:
        raise SchemaMismatch(
            f"scaler fitted for {scaler.n_features_in_} columns, "
            f"dataset has {ds.X.shape[1]}"
        )
    return replace(ds, X=scaler.transform(ds.X))
