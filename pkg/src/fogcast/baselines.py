"""The three reference predictors the boosted model is judged against.

All three consume FeatureDatasets. Persistence and climatology read the raw
(unscaled) columns; the logistic baseline expects the same standardized
matrix as the main model and restricts itself to five surface predictors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import EmptyTraining
from .features import FOG_VISIBILITY_KM
from .gbdt import sigmoid
from .validation import check_both_classes

LOGISTIC_FEATURES = (
    "temperatura_2m",
    "depresion_punto_rocio",
    "velocidad_viento_10m",
    "humedad_relativa",
    "visibilidad_actual",
)


# ---------------------------------------------------------------------------
# persistence

@dataclass(frozen=True)
class PersistenceScores:
    """binary: the strict fog-now-means-fog-later rule; continuous: -visibility.

    The binary score is the faithful baseline. A pure 0/1 score makes ROC
    nearly degenerate, so the negated visibility is emitted alongside it as
    a tie-broken ranking variant; reports show both.
    """

    binary: np.ndarray
    continuous: np.ndarray


def persistence_baseline(ds):
    vis = ds.column("visibilidad_actual")
    return PersistenceScores(
        binary=(vis < FOG_VISIBILITY_KM).astype(np.float64),
        continuous=-vis.astype(np.float64),
    )


# ---------------------------------------------------------------------------
# climatology

@dataclass(frozen=True)
class ClimatologyTable:
    """Fog frequency per (month, hour) cell; empty cells hold the global rate."""

    rates: np.ndarray  # 12 x 24
    global_rate: float

    def lookup(self, timestamps):
        idx = pd.DatetimeIndex(timestamps)
        return self.rates[idx.month.to_numpy() - 1, idx.hour.to_numpy()]


def fit_climatology(train):
    if len(train) == 0:
        raise EmptyTraining("climatology needs at least one training row")
    idx = pd.DatetimeIndex(train.timestamps)
    month = idx.month.to_numpy() - 1
    hour = idx.hour.to_numpy()
    hits = np.zeros((12, 24))
    seen = np.zeros((12, 24))
    np.add.at(hits, (month, hour), train.y)
    np.add.at(seen, (month, hour), 1.0)
    global_rate = float(train.y.mean())
    rates = np.full((12, 24), global_rate)
    filled = seen > 0
    rates[filled] = hits[filled] / seen[filled]
    return ClimatologyTable(rates=rates, global_rate=global_rate)


def climatology_baseline(train, test):
    return fit_climatology(train).lookup(test.timestamps)


# ---------------------------------------------------------------------------
# 5-feature logistic regression

@dataclass(frozen=True)
class LogisticConfig:
    step_size: float = 0.5
    n_iter: int = 500
    class_weighted: bool = True


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # 5
    bias: float
    feature_names: tuple
    feature_indices: tuple

    def scores(self, ds):
        X = ds.X[:, list(self.feature_indices)]
        return sigmoid(X @ self.weights + self.bias)


def _subset_indices(schema):
    return tuple(schema.index(name) for name in LOGISTIC_FEATURES)


def logistic_loss(w, b, X, y, pos_weight):
    """Mean per-row weighted logistic loss (plain mean, weights inside)."""
    m = X @ w + b
    wgt = np.where(y == 1, pos_weight, 1.0)
    ll = y * np.logaddexp(0.0, -m) + (1 - y) * np.logaddexp(0.0, m)
    return float(np.mean(wgt * ll))


def logistic_gradient(w, b, X, y, pos_weight):
    m = X @ w + b
    p = sigmoid(m)
    wgt = np.where(y == 1, pos_weight, 1.0)
    r = wgt * (p - y)
    return X.T @ r / len(y), float(np.mean(r))


def train_logistic(train, config=None):
    """Deterministic full-batch gradient descent from zero initialization."""
    if config is None:
        config = LogisticConfig()
    y = check_both_classes(train.y)
    idx = _subset_indices(train.schema)
    X = train.X[:, list(idx)]
    if config.class_weighted:
        pos_weight = float((y == 0).sum()) / float((y == 1).sum())
    else:
        pos_weight = 1.0
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(config.n_iter):
        gw, gb = logistic_gradient(w, b, X, y, pos_weight)
        w = w - config.step_size * gw
        b = b - config.step_size * gb
    return LinearModel(
        weights=w, bias=float(b),
        feature_names=LOGISTIC_FEATURES, feature_indices=idx,
    )
