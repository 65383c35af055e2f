"""Gradient-boosted decision trees for weighted binary logistic loss.

Exact greedy (sorted-scan) split finding over a dense float matrix, trained
with second-order boosting. Small data by design: presorting each tree's
feature columns once and carrying the sorted row lists through every split
keeps the per-node work linear, which is what makes full-resolution scans
affordable at desk scale.

Determinism contract: given (data, hyperparams, seed) the fitted model is
bit-for-bit reproducible, and -- because rows are reindexed into a canonical
order before training -- independent of the caller's row ordering when
subsample = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    CorruptModelFile,
    InvalidHyperparams,
    VersionMismatch,
)
from .features import FOG_VISIBILITY_KM
from .validation import check_both_classes, check_fitted, check_labels, check_matrix

MODEL_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# hyperparameters

@dataclass(frozen=True)
class Hyperparams:
    """Training configuration. Defaults are the production fog model's.

    scale_pos_weight = None means "compute #negatives / #positives from the
    training labels at fit time".
    """

    n_estimators: int = 1000
    learning_rate: float = 0.05
    max_depth: int = 5
    subsample: float = 0.8
    colsample_bytree: float = 0.8
    scale_pos_weight: float | None = None
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    seed: int = 0

    def validate(self):
        def bad(msg):
            raise InvalidHyperparams(msg)

        if not isinstance(self.n_estimators, (int, np.integer)) or self.n_estimators < 1:
            bad(f"n_estimators must be a positive integer, got {self.n_estimators!r}")
        if not self.learning_rate > 0:
            bad(f"learning_rate must be > 0, got {self.learning_rate!r}")
        if not isinstance(self.max_depth, (int, np.integer)) or self.max_depth < 1:
            bad(f"max_depth must be a positive integer, got {self.max_depth!r}")
        if not 0 < self.subsample <= 1:
            bad(f"subsample must be in (0, 1], got {self.subsample!r}")
        if not 0 < self.colsample_bytree <= 1:
            bad(f"colsample_bytree must be in (0, 1], got {self.colsample_bytree!r}")
        if self.scale_pos_weight is not None and not self.scale_pos_weight > 0:
            bad(f"scale_pos_weight must be > 0, got {self.scale_pos_weight!r}")
        if self.reg_lambda < 0:
            bad(f"reg_lambda must be >= 0, got {self.reg_lambda!r}")
        if self.gamma < 0:
            bad(f"gamma must be >= 0, got {self.gamma!r}")
        if self.min_child_weight < 0:
            bad(f"min_child_weight must be >= 0, got {self.min_child_weight!r}")
        if not isinstance(self.seed, (int, np.integer)):
            bad(f"seed must be an integer, got {self.seed!r}")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidHyperparams(f"unknown hyperparameters: {sorted(unknown)}")
        return cls(**d)


def compute_scale_pos_weight(y):
    """#negatives / #positives; the loss weight applied to positive rows."""
    y = check_both_classes(y)
    return float((y == 0).sum()) / float((y == 1).sum())


# ---------------------------------------------------------------------------
# loss pieces

def sigmoid(m):
    """Numerically stable logistic function, elementwise."""
    m = np.asarray(m, dtype=np.float64)
    out = np.empty_like(m)
    pos = m >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-m[pos]))
    em = np.exp(m[~pos])
    out[~pos] = em / (1.0 + em)
    return out


def logistic_grad_hess(y, margins, scale_pos_weight):
    """Per-row gradient and hessian of the weighted logistic loss.

    w_i = scale_pos_weight if y_i = 1 else 1; g_i = w_i (p_i - y_i);
    h_i = w_i p_i (1 - p_i).
    """
    y = np.asarray(y, dtype=np.float64)
    p = sigmoid(margins)
    w = np.where(y == 1, scale_pos_weight, 1.0)
    return w * (p - y), w * p * (1.0 - p)


def weighted_log_loss(y, margins, scale_pos_weight):
    """Weighted mean logistic loss (weights as in logistic_grad_hess)."""
    y = np.asarray(y, dtype=np.float64)
    m = np.asarray(margins, dtype=np.float64)
    w = np.where(y == 1, scale_pos_weight, 1.0)
    ll = y * np.logaddexp(0.0, -m) + (1.0 - y) * np.logaddexp(0.0, m)
    return float(np.sum(w * ll) / np.sum(w))


# ---------------------------------------------------------------------------
# split search

@dataclass(frozen=True)
class SplitCandidate:
    threshold: float
    gain: float


def _scan_sorted(xs, gs, hs, reg_lambda, gamma, min_child_weight):
    """Best split over values already sorted ascending; None if no positive gain.

    Candidates are midpoints between consecutive distinct values. A candidate
    is admissible only when the midpoint strictly exceeds the lower value
    (guards the adjacent-floats corner where the midpoint rounds down onto
    the left value and would route it the wrong way) and both child hessian
    sums reach min_child_weight. Ties in gain resolve to the smallest
    threshold (first index of the running scan).
    """
    n = xs.shape[0]
    if n < 2:
        return None
    cg = np.cumsum(gs)
    ch = np.cumsum(hs)
    g_total, h_total = cg[-1], ch[-1]
    gl, hl = cg[:-1], ch[:-1]
    gr, hr = g_total - gl, h_total - hl
    mid = 0.5 * (xs[:-1] + xs[1:])
    valid = (xs[:-1] < mid) & (hl >= min_child_weight) & (hr >= min_child_weight)
    if not valid.any():
        return None
    parent_score = g_total * g_total / (h_total + reg_lambda)
    gain = 0.5 * (
        gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent_score
    ) - gamma
    gain[~valid] = -np.inf
    i = int(np.argmax(gain))
    if not gain[i] > 0.0:
        return None
    return SplitCandidate(threshold=float(mid[i]), gain=float(gain[i]))


def find_best_split(feature_values, g, h, reg_lambda=1.0, gamma=0.0, min_child_weight=1.0):
    """Exact greedy split for one feature column; None if nothing improves.

    gain = 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda)
                - (G_L+G_R)^2/(H_L+H_R+lambda)] - gamma
    """
    x = np.asarray(feature_values, dtype=np.float64).reshape(-1)
    g = np.asarray(g, dtype=np.float64).reshape(-1)
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    if not (x.shape == g.shape == h.shape):
        raise ValueError("feature_values, g, h must have equal lengths")
    order = np.argsort(x, kind="stable")
    return _scan_sorted(x[order], g[order], h[order], reg_lambda, gamma, min_child_weight)


# ---------------------------------------------------------------------------
# trees

@dataclass
class Tree:
    """One regression tree in flat-array form.

    feature: split feature per node, -1 for leaves. threshold: split point
    (NaN for leaves). left/right: child node ids (-1 for leaves). value:
    leaf margin contribution, learning rate already applied (0 for internal
    nodes). cover: sum of training hessians routed through the node.
    Internal nodes send x left iff x[feature] < threshold.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    @property
    def n_nodes(self):
        return int(self.feature.shape[0])

    def leaf_indices(self, X):
        idx = np.zeros(X.shape[0], dtype=np.int64)
        active = np.nonzero(self.feature[idx] >= 0)[0]
        while active.size:
            node = idx[active]
            go_left = X[active, self.feature[node]] < self.threshold[node]
            idx[active] = np.where(go_left, self.left[node], self.right[node])
            active = active[self.feature[idx[active]] >= 0]
        return idx

    def margins(self, X):
        return self.value[self.leaf_indices(X)]

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):  # children always follow their parent
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0

    def parents(self):
        par = np.full(self.n_nodes, -1, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                par[self.left[i]] = i
                par[self.right[i]] = i
        return par


class _TreeBuilder:
    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.cover = []

    def new_node(self, cover):
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.cover.append(cover)
        return len(self.feature) - 1

    def set_leaf(self, nid, value):
        self.value[nid] = value

    def set_split(self, nid, feature, threshold, left, right):
        self.feature[nid] = feature
        self.threshold[nid] = threshold
        self.left[nid] = left
        self.right[nid] = right

    def finish(self):
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
            cover=np.asarray(self.cover, dtype=np.float64),
        )


def _grow_tree(X, g, h, rows, feats, hp):
    """Grow one tree on the given row/feature subsets; returns a Tree.

    X is the full canonical matrix; rows/feats are sorted index arrays. Each
    feature keeps a row list presorted by its values; splits partition those
    lists with a boolean mask, which preserves sort order and avoids
    re-sorting below the root.
    """
    lists = {int(f): rows[np.argsort(X[rows, f], kind="stable")] for f in feats}
    feats = [int(f) for f in feats]
    tb = _TreeBuilder()

    def grow(lists, depth):
        node_rows = lists[feats[0]]
        g_sum = float(g[node_rows].sum())
        h_sum = float(h[node_rows].sum())
        nid = tb.new_node(cover=h_sum)
        best = None
        if depth < hp.max_depth and node_rows.size >= 2:
            for f in feats:
                sr = lists[f]
                cand = _scan_sorted(
                    X[sr, f], g[sr], h[sr],
                    hp.reg_lambda, hp.gamma, hp.min_child_weight,
                )
                # strict > keeps the lowest feature index on tied gains
                if cand is not None and (best is None or cand.gain > best[2]):
                    best = (f, cand.threshold, cand.gain)
        if best is None:
            denom = h_sum + hp.reg_lambda
            leaf = -g_sum / denom * hp.learning_rate if denom > 0 else 0.0
            tb.set_leaf(nid, leaf)
            return nid
        f, thr, _ = best
        go_left = X[:, f] < thr
        left_lists = {q: lst[go_left[lst]] for q, lst in lists.items()}
        right_lists = {q: lst[~go_left[lst]] for q, lst in lists.items()}
        left_id = grow(left_lists, depth + 1)
        right_id = grow(right_lists, depth + 1)
        tb.set_split(nid, f, thr, left_id, right_id)
        return nid

    grow(lists, 0)
    return tb.finish()


# ---------------------------------------------------------------------------
# the estimator

class GradientBoostedClassifier(BaseEstimator):
    """Second-order boosted trees with the weighted binary logistic objective.

    Fitted attributes: trees_ (list of Tree), base_margin_, losses_ (weighted
    log loss after each round), schema_ (feature names), hyperparams_ (with
    scale_pos_weight resolved), metadata_, n_features_in_.
    """

    def __init__(
        self,
        n_estimators=1000,
        learning_rate=0.05,
        max_depth=5,
        subsample=0.8,
        colsample_bytree=0.8,
        scale_pos_weight=None,
        reg_lambda=1.0,
        gamma=0.0,
        min_child_weight=1.0,
        seed=0,
    ):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.subsample = subsample
        self.colsample_bytree = colsample_bytree
        self.scale_pos_weight = scale_pos_weight
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.min_child_weight = min_child_weight
        self.seed = seed

    def fit(self, X, y, feature_names=None, metadata=None):
        X = check_matrix(X, name="X")
        y = check_labels(y, n_samples=X.shape[0])
        check_both_classes(y)
        hp = Hyperparams(**{f.name: getattr(self, f.name) for f in fields(Hyperparams)})
        hp.validate()
        if hp.scale_pos_weight is None:
            hp = Hyperparams(**{**hp.to_dict(), "scale_pos_weight": compute_scale_pos_weight(y)})

        n, n_feat = X.shape
        if feature_names is not None and len(tuple(feature_names)) != n_feat:
            raise ValueError(f"{len(tuple(feature_names))} feature names for {n_feat} columns")

        # canonical row order: training must not depend on input permutation
        keys = (y,) + tuple(X[:, j] for j in range(n_feat - 1, -1, -1))
        order = np.lexsort(keys)
        Xc = np.ascontiguousarray(X[order])
        yc = y[order]

        rng = np.random.default_rng(hp.seed)
        n_sub = max(1, int(round(hp.subsample * n)))
        n_col = math.ceil(hp.colsample_bytree * n_feat)
        all_rows = np.arange(n)
        all_feats = np.arange(n_feat)

        margins = np.zeros(n, dtype=np.float64)  # base margin 0: p0 = 0.5
        trees = []
        losses = []
        for _ in range(hp.n_estimators):
            g, h = logistic_grad_hess(yc, margins, hp.scale_pos_weight)
            if hp.subsample < 1.0:
                rows = np.sort(rng.choice(n, size=n_sub, replace=False))
            else:
                rows = all_rows
            if hp.colsample_bytree < 1.0:
                feats = np.sort(rng.choice(n_feat, size=n_col, replace=False))
            else:
                feats = all_feats
            tree = _grow_tree(Xc, g, h, rows, feats, hp)
            trees.append(tree)
            margins += tree.margins(Xc)
            losses.append(weighted_log_loss(yc, margins, hp.scale_pos_weight))

        self.trees_ = trees
        self.base_margin_ = 0.0
        self.losses_ = np.asarray(losses)
        self.n_features_in_ = n_feat
        self.schema_ = tuple(feature_names) if feature_names is not None else tuple(
            f"f{j}" for j in range(n_feat)
        )
        self.hyperparams_ = hp
        self.metadata_ = dict(metadata) if metadata else {}
        return self

    def predict_margin(self, X):
        check_fitted(self, "trees_")
        X = check_matrix(X, n_features=self.n_features_in_)
        out = np.full(X.shape[0], self.base_margin_, dtype=np.float64)
        for tree in self.trees_:
            out += tree.margins(X)
        return out

    def predict_proba(self, X):
        """Probability of the positive class, shape (n_samples,)."""
        return sigmoid(self.predict_margin(X))

    def predict(self, X, threshold=0.5):
        return (self.predict_proba(X) >= threshold).astype(np.int64)


# ---------------------------------------------------------------------------
# spec-flavored functional front

def train_gbdt(train, hp=None):
    """Train on a (scaled) FeatureDataset and return the fitted model."""
    if hp is None:
        hp = Hyperparams()
    hp.validate()
    clf = GradientBoostedClassifier(**hp.to_dict())
    ts = train.timestamps
    metadata = {
        "trained_on": (
            f"{train.site} {np.datetime_as_string(ts[0], unit='s')}"
            f"..{np.datetime_as_string(ts[-1], unit='s')}"
            if len(train)
            else train.site
        ),
        "label_definition": (
            f"visibility < {FOG_VISIBILITY_KM} km at t+{train.horizon_h}h "
            "and report present"
        ),
        "horizon_h": train.horizon_h,
    }
    return clf.fit(train.X, train.y, feature_names=train.schema, metadata=metadata)


def predict_margin(model, x):
    """Margin for a single feature vector (or rows of a matrix)."""
    out = model.predict_margin(x)
    return float(out[0]) if np.asarray(x).ndim == 1 else out


def predict_proba(model, x):
    """Positive-class probability for a single vector (or rows of a matrix)."""
    out = model.predict_proba(x)
    return float(out[0]) if np.asarray(x).ndim == 1 else out


# ---------------------------------------------------------------------------
# persistence

def _tree_to_nodes(tree):
    par = tree.parents()
    nodes = []
    for i in range(tree.n_nodes):
        is_leaf = tree.feature[i] < 0
        nodes.append(
            {
                "id": i,
                "parent": int(par[i]),
                "left": int(tree.left[i]),
                "right": int(tree.right[i]),
                "feature": int(tree.feature[i]),
                "threshold": None if is_leaf else float(tree.threshold[i]),
                "leaf_value": float(tree.value[i]) if is_leaf else None,
                "cover": float(tree.cover[i]),
            }
        )
    return {"nodes": nodes}


def _tree_from_nodes(doc):
    nodes = doc["nodes"]
    n = len(nodes)
    tree = Tree(
        feature=np.full(n, -1, dtype=np.int32),
        threshold=np.full(n, np.nan, dtype=np.float64),
        left=np.full(n, -1, dtype=np.int32),
        right=np.full(n, -1, dtype=np.int32),
        value=np.zeros(n, dtype=np.float64),
        cover=np.zeros(n, dtype=np.float64),
    )
    for node in nodes:
        i = int(node["id"])
        if not 0 <= i < n:
            raise CorruptModelFile(f"node id {i} out of range")
        f = int(node["feature"])
        tree.feature[i] = f
        tree.cover[i] = float(node["cover"])
        if f >= 0:
            left, right = int(node["left"]), int(node["right"])
            if not (0 <= left < n and 0 <= right < n):
                raise CorruptModelFile(f"child index out of range at node {i}")
            tree.threshold[i] = float(node["threshold"])
            tree.left[i] = left
            tree.right[i] = right
        else:
            tree.value[i] = float(node["leaf_value"])
    return tree


def persist_model(model):
    """Serialize a fitted model to bytes (deterministic JSON)."""
    check_fitted(model, "trees_")
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "base_margin": model.base_margin_,
        "schema": list(model.schema_),
        "hyperparams": model.hyperparams_.to_dict(),
        "metadata": model.metadata_,
        "trees": [_tree_to_nodes(t) for t in model.trees_],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def restore_model(data):
    """Rebuild a model from persist_model output.

    Raises CorruptModelFile for anything unreadable and VersionMismatch for a
    well-formed file written by a different format version.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise CorruptModelFile(f"model file is not UTF-8: {e}") from e
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise CorruptModelFile(f"model file is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise CorruptModelFile("model file must contain a JSON object")
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatch(
            f"model format version {version!r}, expected {MODEL_FORMAT_VERSION}"
        )
    try:
        hp = Hyperparams.from_dict(doc["hyperparams"])
        clf = GradientBoostedClassifier(**hp.to_dict())
        clf.trees_ = [_tree_from_nodes(t) for t in doc["trees"]]
        clf.base_margin_ = float(doc["base_margin"])
        clf.schema_ = tuple(doc["schema"])
        clf.metadata_ = doc.get("metadata", {})
        clf.hyperparams_ = hp
        clf.n_features_in_ = len(clf.schema_)
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptModelFile(f"model file is missing or corrupts a field: {e}") from e
    return clf


def save_model(model, path):
    with open(path, "wb") as fh:
        fh.write(persist_model(model))


def load_model(path):
    with open(path, "rb") as fh:
        return restore_model(fh.read())
