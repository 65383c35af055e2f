import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogcast.errors import (
    CorruptModelFile,
    DegenerateLabels,
    InvalidHyperparams,
    SchemaMismatch,
    VersionMismatch,
)
from fogcast.features import FEATURE_NAMES, assemble_features
from fogcast.gbdt import (
    GradientBoostedClassifier,
    Hyperparams,
    _grow_tree,
    compute_scale_pos_weight,
    find_best_split,
    load_model,
    logistic_grad_hess,
    persist_model,
    predict_margin,
    predict_proba,
    restore_model,
    save_model,
    sigmoid,
    train_gbdt,
    weighted_log_loss,
)
from helpers import make_series


def brute_best_split(x, g, h, reg_lambda, gamma, min_child_weight):
    """Exhaustive enumeration over every midpoint candidate."""
    best = None
    xs = np.sort(np.unique(x))
    for a, b in zip(xs[:-1], xs[1:]):
        thr = (a + b) / 2
        if not a < thr:
            continue
        left = x < thr
        gl, hl = g[left].sum(), h[left].sum()
        gr, hr = g[~left].sum(), h[~left].sum()
        if hl < min_child_weight or hr < min_child_weight:
            continue
        gain = (
            0.5
            * (
                gl * gl / (hl + reg_lambda)
                + gr * gr / (hr + reg_lambda)
                - (gl + gr) ** 2 / (hl + hr + reg_lambda)
            )
            - gamma
        )
        if gain > 0.0 and (best is None or gain > best[1]):
            best = (thr, gain)
    return best


def int_dataset(rng, n_rows, n_feats=1):
    """Integer-valued inputs keep every sum exact, so oracle equality is ==."""
    x = rng.integers(-5, 6, size=(n_rows, n_feats)).astype(np.float64)
    g = rng.integers(-3, 4, size=n_rows).astype(np.float64)
    h = rng.integers(1, 5, size=n_rows).astype(np.float64)
    return x, g, h


class TestScalePosWeight:
    def test_paper_ratio(self):
        y = np.array([0] * 2662 + [1] * 100)
        assert compute_scale_pos_weight(y) == 26.62

    def test_balanced(self):
        assert compute_scale_pos_weight([0, 1, 0, 1]) == 1.0

    def test_single_class(self):
        with pytest.raises(DegenerateLabels):
            compute_scale_pos_weight([1, 1, 1])


class TestLossPieces:
    def test_sigmoid_extremes(self):
        assert sigmoid(0.0) == 0.5
        assert sigmoid(800.0) == 1.0
        assert sigmoid(-800.0) == 0.0
        m = np.linspace(-20, 20, 101)
        p = sigmoid(m)
        assert np.all(np.diff(p) > 0)

    def test_grad_hess_values(self):
        y = np.array([0, 1])
        g, h = logistic_grad_hess(y, np.zeros(2), scale_pos_weight=3.0)
        assert g[0] == 0.5 and g[1] == 3.0 * (0.5 - 1.0)
        assert h[0] == 0.25 and h[1] == 0.75

    def test_pos_weight_scales_positive_rows_exactly(self):
        rng = np.random.default_rng(1)
        y = rng.integers(0, 2, 50)
        m = rng.standard_normal(50)
        g1, h1 = logistic_grad_hess(y, m, 5.0)
        g2, h2 = logistic_grad_hess(y, m, 10.0)  # factor 2: exact in floats
        pos = y == 1
        assert np.array_equal(g2[pos], 2.0 * g1[pos])
        assert np.array_equal(h2[pos], 2.0 * h1[pos])
        assert np.array_equal(g2[~pos], g1[~pos])
        assert np.array_equal(h2[~pos], h1[~pos])

    def test_loss_at_zero_margin_is_log2(self):
        y = np.array([0, 1, 1, 0, 1])
        assert weighted_log_loss(y, np.zeros(5), 7.0) == pytest.approx(math.log(2))


class TestFindBestSplit:
    def test_hand_example(self):
        out = find_best_split([0.0, 1.0], [-1.0, 1.0], [1.0, 1.0], reg_lambda=0.0,
                              gamma=0.0, min_child_weight=0.0)
        assert out is not None
        assert out.threshold == 0.5
        assert out.gain == 1.0

    def test_constant_feature(self):
        assert find_best_split([2.0, 2.0, 2.0], [-1, 1, -1], [1, 1, 1]) is None

    def test_zero_gradients(self):
        assert find_best_split([0.0, 1.0, 2.0], [0, 0, 0], [1, 1, 1]) is None

    def test_min_child_weight_blocks(self):
        # the only useful split leaves h=1 on the left, below the floor of 2
        out = find_best_split([0.0, 1.0, 2.0], [-3, 3, 3], [1, 1, 1],
                              reg_lambda=0.0, min_child_weight=2.0)
        assert out is None or out.threshold == 1.5

    def test_tie_takes_smallest_threshold(self):
        # mirror-symmetric gains at 0.5 and 1.5
        out = find_best_split([0.0, 1.0, 2.0], [-1.0, 0.0, 1.0], [1.0, 1.0, 1.0],
                              reg_lambda=0.0, gamma=0.0, min_child_weight=0.0)
        assert out.threshold == 0.5

    def test_gamma_subtracts(self):
        base = find_best_split([0.0, 1.0], [-1.0, 1.0], [1.0, 1.0],
                               reg_lambda=0.0, gamma=0.0, min_child_weight=0.0)
        taxed = find_best_split([0.0, 1.0], [-1.0, 1.0], [1.0, 1.0],
                                reg_lambda=0.0, gamma=0.25, min_child_weight=0.0)
        assert taxed.gain == base.gain - 0.25
        none = find_best_split([0.0, 1.0], [-1.0, 1.0], [1.0, 1.0],
                               reg_lambda=0.0, gamma=1.0, min_child_weight=0.0)
        assert none is None  # gain would be exactly 0, not positive

    def test_unsorted_input_handled(self):
        a = find_best_split([3.0, 1.0, 2.0, 0.0], [1, -2, 1, -1], [1, 1, 1, 1])
        b = find_best_split([0.0, 1.0, 2.0, 3.0], [-1, -2, 1, 1], [1, 1, 1, 1])
        assert a == b

    def test_oracle_500_datasets_exact(self):
        rng = np.random.default_rng(20260814)
        checked = 0
        for _ in range(500):
            n = int(rng.integers(2, 65))
            x, g, h = int_dataset(rng, n)
            lam = float(rng.integers(0, 3))
            gamma = float(rng.integers(0, 2))
            mcw = float(rng.integers(0, 3))
            got = find_best_split(x[:, 0], g, h, lam, gamma, mcw)
            want = brute_best_split(x[:, 0], g, h, lam, gamma, mcw)
            if want is None:
                assert got is None
            else:
                assert got is not None
                assert got.threshold == want[0]
                assert got.gain == want[1]
                checked += 1
        assert checked > 100  # the generator should produce plenty of real splits

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_oracle_property_exact(self, data):
        n = data.draw(st.integers(2, 32))
        x = np.array(data.draw(st.lists(st.integers(-4, 4), min_size=n, max_size=n)),
                     dtype=np.float64)
        g = np.array(data.draw(st.lists(st.integers(-3, 3), min_size=n, max_size=n)),
                     dtype=np.float64)
        h = np.array(data.draw(st.lists(st.integers(1, 4), min_size=n, max_size=n)),
                     dtype=np.float64)
        lam = float(data.draw(st.integers(0, 2)))
        mcw = float(data.draw(st.integers(0, 2)))
        got = find_best_split(x, g, h, lam, 0.0, mcw)
        want = brute_best_split(x, g, h, lam, 0.0, mcw)
        if want is None:
            assert got is None
        else:
            assert (got.threshold, got.gain) == want

    def test_root_choice_matches_multifeature_oracle(self):
        rng = np.random.default_rng(7)
        hp = Hyperparams(max_depth=1, learning_rate=1.0, reg_lambda=1.0,
                         gamma=0.0, min_child_weight=1.0)
        for _ in range(100):
            n = int(rng.integers(4, 65))
            k = int(rng.integers(1, 5))
            x, g, h = int_dataset(rng, n, k)
            tree = _grow_tree(x, g, h, np.arange(n), np.arange(k), hp)
            # oracle: best (feature, threshold) over exhaustive enumeration,
            # gain ties -> lowest feature index, then smallest threshold
            best = None
            for f in range(k):
                cand = brute_best_split(x[:, f], g, h, 1.0, 0.0, 1.0)
                if cand is not None and (best is None or cand[1] > best[2]):
                    best = (f, cand[0], cand[1])
            if best is None:
                assert tree.n_nodes == 1
            else:
                assert tree.feature[0] == best[0]
                assert tree.threshold[0] == best[1]


class TestGrowTree:
    def test_single_leaf_hand_example(self):
        # 4 rows, constant feature, all labels 0 at p = 0.5:
        # G = 2, H = 1, lambda = 1 -> leaf = -2/2 * 0.05 = -0.05
        X = np.zeros((4, 1))
        g = np.full(4, 0.5)
        h = np.full(4, 0.25)
        hp = Hyperparams(learning_rate=0.05, reg_lambda=1.0)
        tree = _grow_tree(X, g, h, np.arange(4), np.arange(1), hp)
        assert tree.n_nodes == 1
        assert tree.value[0] == -0.05
        assert tree.cover[0] == 1.0
        assert np.all(tree.margins(X) == -0.05)

    def test_cover_additivity_and_depth(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((400, 6))
        g = rng.standard_normal(400)
        h = rng.uniform(0.1, 1.0, 400)
        hp = Hyperparams(max_depth=4, learning_rate=0.1)
        tree = _grow_tree(X, g, h, np.arange(400), np.arange(6), hp)
        assert tree.depth() <= 4
        internal = tree.feature >= 0
        lhs = tree.cover[internal]
        rhs = tree.cover[tree.left[internal]] + tree.cover[tree.right[internal]]
        assert np.max(np.abs(lhs - rhs)) <= 1e-9
        # every leaf that resulted from a split satisfies the cover floor
        par = tree.parents()
        split_leaves = (~internal) & (par >= 0)
        assert np.all(tree.cover[split_leaves] >= hp.min_child_weight - 1e-12)


def toy_separable(n=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, size=(n, 1))
    y = (x[:, 0] >= 0).astype(np.int64)
    # guarantee both classes
    x[0, 0], y[0] = -0.5, 0
    x[1, 0], y[1] = 0.5, 1
    return x, y


class TestClassifier:
    def test_separable_toy_perfect_ranking(self):
        X, y = toy_separable()
        clf = GradientBoostedClassifier(
            n_estimators=50, max_depth=3, subsample=1.0, colsample_bytree=1.0, seed=0
        ).fit(X, y)
        p = clf.predict_proba(X)
        assert p[y == 1].min() > p[y == 0].max()  # AUC = 1.0

    def test_determinism_bitwise(self):
        X, y = toy_separable(300, seed=2)
        X = np.hstack([X, np.random.default_rng(9).standard_normal((300, 3))])
        kw = dict(n_estimators=20, max_depth=3, subsample=0.7,
                  colsample_bytree=0.5, seed=11)
        a = GradientBoostedClassifier(**kw).fit(X, y)
        b = GradientBoostedClassifier(**kw).fit(X, y)
        probe = np.random.default_rng(1).standard_normal((50, 4))
        assert np.array_equal(a.predict_proba(probe), b.predict_proba(probe))
        assert persist_model(a) == persist_model(b)

    def test_row_order_invariance(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((150, 3))
        y = (X[:, 0] + 0.3 * rng.standard_normal(150) > 0).astype(int)
        y[:2] = [0, 1]
        kw = dict(n_estimators=15, max_depth=3, subsample=1.0,
                  colsample_bytree=1.0, seed=5)
        a = GradientBoostedClassifier(**kw).fit(X, y)
        perm = rng.permutation(150)
        b = GradientBoostedClassifier(**kw).fit(X[perm], y[perm])
        probe = rng.standard_normal((40, 3))
        assert np.array_equal(a.predict_margin(probe), b.predict_margin(probe))

    def test_loss_non_increasing_full_batch(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((300, 5))
        score = X @ np.array([1.5, -1.0, 0.5, 0.0, 0.0])
        y = (score + 0.5 * rng.standard_normal(300) > 0).astype(int)
        clf = GradientBoostedClassifier(
            n_estimators=60, max_depth=3, subsample=1.0, colsample_bytree=1.0, seed=0
        ).fit(X, y)
        assert np.all(np.diff(clf.losses_) <= 1e-12)

    def test_margin_additivity_over_trees(self):
        X, y = toy_separable(120, seed=3)
        clf = GradientBoostedClassifier(
            n_estimators=10, max_depth=2, subsample=1.0, colsample_bytree=1.0, seed=0
        ).fit(X, y)
        probe = np.random.default_rng(2).uniform(-1, 1, (30, 1))
        full = clf.predict_margin(probe)
        last = clf.trees_.pop()
        partial = clf.predict_margin(probe)
        clf.trees_.append(last)
        # the accumulator adds trees in order, so this holds bitwise
        assert np.array_equal(full, partial + last.margins(probe))

    def test_max_depth_respected_everywhere(self):
        X, y = toy_separable(250, seed=6)
        X = np.hstack([X, np.random.default_rng(3).standard_normal((250, 2))])
        clf = GradientBoostedClassifier(
            n_estimators=25, max_depth=2, subsample=0.8, colsample_bytree=0.8, seed=1
        ).fit(X, y)
        assert max(t.depth() for t in clf.trees_) <= 2

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateLabels):
            GradientBoostedClassifier(n_estimators=2).fit(np.zeros((4, 2)), [0, 0, 0, 0])

    def test_bad_hyperparams_rejected(self):
        X, y = toy_separable(50)
        for kw in (
            {"n_estimators": 0},
            {"learning_rate": 0.0},
            {"max_depth": 0},
            {"subsample": 0.0},
            {"subsample": 1.5},
            {"colsample_bytree": -0.1},
            {"scale_pos_weight": 0.0},
            {"reg_lambda": -1.0},
            {"gamma": -0.5},
            {"min_child_weight": -1.0},
            {"seed": 1.5},
        ):
            with pytest.raises(InvalidHyperparams):
                GradientBoostedClassifier(**kw).fit(X, y)

    def test_predict_schema_mismatch(self):
        X, y = toy_separable(50)
        clf = GradientBoostedClassifier(n_estimators=2, subsample=1.0,
                                        colsample_bytree=1.0).fit(X, y)
        with pytest.raises(SchemaMismatch):
            clf.predict_proba(np.zeros((3, 2)))

    def test_sklearn_params_protocol(self):
        clf = GradientBoostedClassifier(n_estimators=7)
        params = clf.get_params()
        assert params["n_estimators"] == 7
        assert params["learning_rate"] == 0.05
        clone = GradientBoostedClassifier(**params)
        assert clone.get_params() == params


class TestHyperparams:
    def test_defaults(self):
        hp = Hyperparams()
        assert (hp.n_estimators, hp.learning_rate, hp.max_depth) == (1000, 0.05, 5)
        assert (hp.subsample, hp.colsample_bytree) == (0.8, 0.8)
        assert hp.scale_pos_weight is None
        assert (hp.reg_lambda, hp.gamma, hp.min_child_weight) == (1.0, 0.0, 1.0)

    def test_from_dict_unknown_key(self):
        with pytest.raises(InvalidHyperparams):
            Hyperparams.from_dict({"n_estimators": 5, "bogus": 1})

    def test_round_trip(self):
        hp = Hyperparams(n_estimators=3, scale_pos_weight=2.5)
        assert Hyperparams.from_dict(hp.to_dict()) == hp


def small_feature_dataset():
    rng = np.random.default_rng(12)
    vis = rng.uniform(2, 10, 24 * 30)
    for start in range(30, 24 * 30 - 40, 67):  # periodic fog spells
        vis[start : start + 4] = 0.4
    return assemble_features(make_series(24 * 30, vis=vis), horizon_h=2)


class TestTrainGbdt:
    def test_metadata_and_schema(self):
        ds = small_feature_dataset()
        hp = Hyperparams(n_estimators=5, max_depth=3, seed=1)
        model = train_gbdt(ds, hp)
        assert model.schema_ == FEATURE_NAMES
        assert model.metadata_["horizon_h"] == 2
        assert "SCEL" in model.metadata_["trained_on"]
        assert "visibility < 1.0 km" in model.metadata_["label_definition"]
        assert model.hyperparams_.scale_pos_weight == compute_scale_pos_weight(ds.y)
        assert len(model.losses_) == 5

    def test_spec_default_spw_comes_from_data(self):
        ds = small_feature_dataset()
        model = train_gbdt(ds, Hyperparams(n_estimators=2, seed=0))
        neg, pos = (ds.y == 0).sum(), (ds.y == 1).sum()
        assert model.hyperparams_.scale_pos_weight == neg / pos

    def test_invalid_hp_via_train(self):
        ds = small_feature_dataset()
        with pytest.raises(InvalidHyperparams):
            train_gbdt(ds, Hyperparams(n_estimators=-1))

    def test_functional_predict_wrappers(self):
        ds = small_feature_dataset()
        model = train_gbdt(ds, Hyperparams(n_estimators=4, seed=2))
        x = ds.X[10]
        m = predict_margin(model, x)
        p = predict_proba(model, x)
        assert isinstance(m, float) and isinstance(p, float)
        assert p == sigmoid(np.array([m]))[0]
        batch = predict_proba(model, ds.X[:5])
        assert batch.shape == (5,)
        assert batch[0] == predict_proba(model, ds.X[0])


def empty_model_doc():
    return {
        "version": 1,
        "base_margin": 0.0,
        "schema": list(FEATURE_NAMES),
        "hyperparams": Hyperparams().to_dict(),
        "metadata": {},
        "trees": [],
    }


class TestPersistence:
    def test_round_trip_identical_probabilities(self):
        X, y = toy_separable(200, seed=1)
        X = np.hstack([X, np.random.default_rng(5).standard_normal((200, 2))])
        clf = GradientBoostedClassifier(n_estimators=15, max_depth=3, seed=3).fit(X, y)
        back = restore_model(persist_model(clf))
        probe = np.random.default_rng(0).standard_normal((1000, 3))
        assert np.array_equal(back.predict_proba(probe), clf.predict_proba(probe))
        assert back.schema_ == clf.schema_
        assert back.hyperparams_ == clf.hyperparams_

    def test_persist_is_deterministic(self):
        X, y = toy_separable(80)
        clf = GradientBoostedClassifier(n_estimators=3, seed=0).fit(X, y)
        assert persist_model(clf) == persist_model(clf)

    def test_save_load_paths(self, tmp_path):
        X, y = toy_separable(80)
        clf = GradientBoostedClassifier(n_estimators=3, seed=0).fit(X, y)
        p = tmp_path / "model.json"
        save_model(clf, p)
        back = load_model(p)
        assert np.array_equal(back.predict_proba(X), clf.predict_proba(X))

    def test_truncated_file(self):
        X, y = toy_separable(80)
        raw = persist_model(GradientBoostedClassifier(n_estimators=2, seed=0).fit(X, y))
        with pytest.raises(CorruptModelFile):
            restore_model(raw[: len(raw) // 2])

    def test_unknown_version(self):
        doc = empty_model_doc()
        doc["version"] = 99
        with pytest.raises(VersionMismatch):
            restore_model(json.dumps(doc).encode())

    def test_missing_field(self):
        doc = empty_model_doc()
        del doc["base_margin"]
        with pytest.raises(CorruptModelFile):
            restore_model(json.dumps(doc).encode())

    def test_empty_tree_list_predicts_base_margin(self):
        model = restore_model(json.dumps(empty_model_doc()).encode())
        x = np.zeros(19)
        assert predict_margin(model, x) == 0.0
        assert predict_proba(model, x) == 0.5

    def test_single_leaf_probability(self):
        doc = empty_model_doc()
        doc["trees"] = [
            {
                "nodes": [
                    {"id": 0, "parent": -1, "left": -1, "right": -1, "feature": -1,
                     "threshold": None, "leaf_value": -0.05, "cover": 1.0}
                ]
            }
        ]
        model = restore_model(json.dumps(doc).encode())
        x = np.zeros(19)
        assert predict_margin(model, x) == -0.05
        assert predict_proba(model, x) == pytest.approx(1.0 / (1.0 + math.exp(0.05)))
