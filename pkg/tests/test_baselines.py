import numpy as np
import pytest

from fogcast.baselines import (
    LOGISTIC_FEATURES,
    LinearModel,
    LogisticConfig,
    climatology_baseline,
    fit_climatology,
    logistic_gradient,
    logistic_loss,
    persistence_baseline,
    train_logistic,
)
from fogcast.errors import DegenerateLabels, EmptyTraining
from fogcast.features import FEATURE_NAMES, assemble_features
from fogcast.metrics import roc_auc
from fogcast.scaling import apply_scaler, fit_scaler
from helpers import make_series


def fog_dataset(n_hours=24 * 40, seed=12):
    rng = np.random.default_rng(seed)
    vis = rng.uniform(2, 10, n_hours)
    for start in range(30, n_hours - 40, 61):
        vis[start : start + 3] = 0.4
    return assemble_features(make_series(n_hours, vis=vis), horizon_h=2)


class TestPersistence:
    def test_fog_now_predicts_fog(self):
        ds = fog_dataset()
        out = persistence_baseline(ds)
        vis = ds.column("visibilidad_actual")
        assert np.all(out.binary[vis < 1.0] == 1.0)
        assert np.all(out.binary[vis >= 1.0] == 0.0)

    def test_boundary_is_strict(self):
        ds = fog_dataset()
        ds.X[0, 0] = 1.0  # exactly at the fog definition
        out = persistence_baseline(ds)
        assert out.binary[0] == 0.0

    def test_continuous_is_negated_visibility(self):
        ds = fog_dataset()
        out = persistence_baseline(ds)
        assert np.array_equal(out.continuous, -ds.column("visibilidad_actual"))

    def test_constant_visibility_auc_half(self):
        ds = fog_dataset()
        ds.X[:, 0] = 5.0
        out = persistence_baseline(ds)
        y = np.zeros(len(ds), dtype=int)
        y[:10] = 1
        assert roc_auc(out.binary, y) == 0.5
        assert roc_auc(out.continuous, y) == 0.5


class TestClimatology:
    def test_cell_frequency(self):
        ds = fog_dataset()
        table = fit_climatology(ds)
        import pandas as pd

        idx = pd.DatetimeIndex(ds.timestamps)
        month, hour = 7, 6
        mask = (idx.month == month) & (idx.hour == hour)
        if mask.sum():
            want = ds.y[mask].mean()
            assert table.rates[month - 1, hour] == pytest.approx(want)

    def test_unseen_cell_gets_global_rate(self):
        ds = fog_dataset()  # July-August window: January never observed
        table = fit_climatology(ds)
        assert table.rates[0, 0] == pytest.approx(table.global_rate)
        assert table.global_rate == pytest.approx(ds.y.mean())

    def test_lookup_matches_test_rows(self):
        ds = fog_dataset()
        scores = climatology_baseline(ds, ds)
        assert scores.shape == (len(ds),)
        assert scores.min() >= 0 and scores.max() <= 1

    def test_uniform_training_fog_gives_constant_scores(self):
        train = fog_dataset()
        train.y[:] = 1  # every observed cell rate 1.0 == global fallback
        scores = climatology_baseline(train, train)
        assert np.unique(scores).size == 1
        eval_y = np.zeros(len(train), dtype=int)
        eval_y[:5] = 1
        assert roc_auc(scores, eval_y) == 0.5

    def test_empty_training(self):
        ds = fog_dataset()
        with pytest.raises(EmptyTraining):
            climatology_baseline(ds.subset(np.zeros(len(ds), dtype=bool)), ds)

    def test_all_cells_in_range(self):
        ds = fog_dataset()
        table = fit_climatology(ds)
        assert table.rates.shape == (12, 24)
        assert table.rates.min() >= 0 and table.rates.max() <= 1


class TestLogistic:
    def test_gradient_at_origin(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((100, 5))
        y = rng.integers(0, 2, 100)
        _, gb = logistic_gradient(np.zeros(5), 0.0, X, y, 1.0)
        assert gb == pytest.approx(0.5 - y.mean(), abs=1e-12)

    def test_finite_difference_gradient(self):
        rng = np.random.default_rng(20260814)
        X = rng.standard_normal((60, 5))
        y = rng.integers(0, 2, 60)
        y[:2] = [0, 1]
        eps = 1e-6
        for _ in range(10):
            w = rng.standard_normal(5)
            b = float(rng.standard_normal())
            spw = float(rng.uniform(1, 5))
            gw, gb = logistic_gradient(w, b, X, y, spw)
            for j in range(5):
                e = np.zeros(5)
                e[j] = eps
                num = (logistic_loss(w + e, b, X, y, spw)
                       - logistic_loss(w - e, b, X, y, spw)) / (2 * eps)
                assert abs(num - gw[j]) <= 1e-6 * max(1.0, abs(gw[j]))
            num_b = (logistic_loss(w, b + eps, X, y, spw)
                     - logistic_loss(w, b - eps, X, y, spw)) / (2 * eps)
            assert abs(num_b - gb) <= 1e-6 * max(1.0, abs(gb))

    def test_separable_toy_perfect_auc(self):
        ds = fog_dataset()
        # visibility alone separates: y = 1 iff current vis below 1
        ds.y[:] = (ds.column("visibilidad_actual") < 1.0).astype(int)
        scaler = fit_scaler(ds)
        scaled = apply_scaler(scaler, ds)
        model = train_logistic(scaled)
        assert roc_auc(model.scores(scaled), scaled.y) == 1.0

    def test_deterministic(self):
        ds = fog_dataset()
        scaled = apply_scaler(fit_scaler(ds), ds)
        a = train_logistic(scaled)
        b = train_logistic(scaled)
        assert np.array_equal(a.weights, b.weights)
        assert a.bias == b.bias

    def test_feature_subset_is_pinned(self):
        ds = fog_dataset()
        scaled = apply_scaler(fit_scaler(ds), ds)
        model = train_logistic(scaled, LogisticConfig(n_iter=5))
        assert model.feature_names == LOGISTIC_FEATURES
        assert model.feature_indices == tuple(
            FEATURE_NAMES.index(n) for n in LOGISTIC_FEATURES
        )
        assert isinstance(model, LinearModel)

    def test_single_class_rejected(self):
        ds = fog_dataset()
        ds.y[:] = 0
        with pytest.raises(DegenerateLabels):
            train_logistic(ds)

    def test_unweighted_config(self):
        ds = fog_dataset()
        scaled = apply_scaler(fit_scaler(ds), ds)
        a = train_logistic(scaled, LogisticConfig(n_iter=50, class_weighted=True))
        b = train_logistic(scaled, LogisticConfig(n_iter=50, class_weighted=False))
        assert not np.array_equal(a.weights, b.weights)
