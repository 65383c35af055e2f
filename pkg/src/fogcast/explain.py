"""Exact per-prediction attributions over the boosted trees.

The fast path is the cover-weighted path recursion (path-dependent TreeSHAP):
conditional expectations are estimated by descending the tree and weighting
absent-feature branches by their training cover fractions. `brute_force_shap`
computes the same game's Shapley values by explicit subset enumeration and
exists purely as an oracle for the fast kernel.

Attributions are in margin (log-odds) space; additivity is exact only before
the sigmoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numba import njit, prange

from .errors import EmptyDataset, TooManyFeatures, ZeroCoverNode
from .validation import check_fitted, check_matrix


# ---------------------------------------------------------------------------
# path algebra (Lundberg-style EXTEND / UNWIND on subset-weight paths)

@njit(cache=True)
def _extend(pd, pz, po, pw, cur, di, z, o):
    """Append one feature to the path; cur = entries before the append."""
    pd[cur] = di
    pz[cur] = z
    po[cur] = o
    pw[cur] = 1.0 if cur == 0 else 0.0
    for i in range(cur - 1, -1, -1):
        pw[i + 1] += o * pw[i] * (i + 1.0) / (cur + 1.0)
        pw[i] = z * pw[i] * (cur - i) / (cur + 1.0)
    return cur + 1


@njit(cache=True)
def _unwind(pd, pz, po, pw, last, k):
    """Remove entry k from a path whose last entry index is `last`."""
    o = po[k]
    z = pz[k]
    nxt = pw[last]
    if o != 0.0:
        for i in range(last - 1, -1, -1):
            tmp = pw[i]
            pw[i] = nxt * (last + 1.0) / ((i + 1.0) * o)
            nxt = tmp - pw[i] * z * (last - i) / (last + 1.0)
    else:
        for i in range(last - 1, -1, -1):
            pw[i] = pw[i] * (last + 1.0) / (z * (last - i))
    for j in range(k, last):
        pd[j] = pd[j + 1]
        pz[j] = pz[j + 1]
        po[j] = po[j + 1]
    # weights are positional by subset size; they do not shift


@njit(cache=True)
def _unwound_sum(pz, po, pw, last, k):
    """Sum of the weights the path would have after removing entry k."""
    o = po[k]
    z = pz[k]
    total = 0.0
    nxt = pw[last]
    if o != 0.0:
        for i in range(last - 1, -1, -1):
            tmp = nxt * (last + 1.0) / ((i + 1.0) * o)
            total += tmp
            nxt = pw[i] - tmp * z * (last - i) / (last + 1.0)
    else:
        for i in range(last - 1, -1, -1):
            total += pw[i] * (last + 1.0) / (z * (last - i))
    return total


@njit(cache=True)
def _tree_shap_one(feat, thr, left, right, val, cov, base, x, phi,
                   pd, pz, po, pw, plen,
                   st_node, st_lvl, st_pz, st_po, st_pi):
    """Accumulate one tree's attributions for one row into phi.

    Iterative preorder with an explicit stack; level L keeps its own path
    row, copied from L-1 on entry, so a node's pending sibling still sees
    the parent path untouched when it pops later.
    """
    top = 0
    st_node[0] = 0
    st_lvl[0] = 0
    st_pz[0] = 1.0
    st_po[0] = 1.0
    st_pi[0] = -1
    while top >= 0:
        node = st_node[top]
        lvl = st_lvl[top]
        z = st_pz[top]
        o = st_po[top]
        fi = st_pi[top]
        top -= 1

        cur = 0
        if lvl > 0:
            cur = plen[lvl - 1]
            for j in range(cur):
                pd[lvl, j] = pd[lvl - 1, j]
                pz[lvl, j] = pz[lvl - 1, j]
                po[lvl, j] = po[lvl - 1, j]
                pw[lvl, j] = pw[lvl - 1, j]
        cur = _extend(pd[lvl], pz[lvl], po[lvl], pw[lvl], cur, fi, z, o)

        g = base + node
        f = feat[g]
        if f < 0:
            v = val[g]
            for idx in range(1, cur):
                s = _unwound_sum(pz[lvl], po[lvl], pw[lvl], cur - 1, idx)
                phi[pd[lvl, idx]] += s * (po[lvl, idx] - pz[lvl, idx]) * v
        else:
            if x[f] < thr[g]:
                hot, cold = left[g], right[g]
            else:
                hot, cold = right[g], left[g]
            iz = 1.0
            io = 1.0
            k = -1
            for idx in range(1, cur):
                if pd[lvl, idx] == f:
                    k = idx
                    break
            if k >= 0:  # feature already conditioned on this path
                iz = pz[lvl, k]
                io = po[lvl, k]
                _unwind(pd[lvl], pz[lvl], po[lvl], pw[lvl], cur - 1, k)
                cur -= 1
            plen[lvl] = cur
            c = cov[g]
            # push cold first so the hot child pops (and runs) first
            top += 1
            st_node[top] = cold
            st_lvl[top] = lvl + 1
            st_pz[top] = iz * cov[base + cold] / c
            st_po[top] = 0.0
            st_pi[top] = f
            top += 1
            st_node[top] = hot
            st_lvl[top] = lvl + 1
            st_pz[top] = iz * cov[base + hot] / c
            st_po[top] = io
            st_pi[top] = f


@njit(cache=True, parallel=True)
def _shap_kernel(feat, thr, left, right, val, cov, offsets, X, max_path):
    n_rows, n_feat = X.shape
    out = np.zeros((n_rows, n_feat))
    n_trees = offsets.shape[0] - 1
    width = max_path + 2
    stack_cap = 2 * max_path + 6
    for i in prange(n_rows):
        pd = np.empty((max_path + 1, width), dtype=np.int64)
        pz = np.empty((max_path + 1, width))
        po = np.empty((max_path + 1, width))
        pw = np.empty((max_path + 1, width))
        plen = np.zeros(max_path + 1, dtype=np.int64)
        st_node = np.empty(stack_cap, dtype=np.int64)
        st_lvl = np.empty(stack_cap, dtype=np.int64)
        st_pz = np.empty(stack_cap)
        st_po = np.empty(stack_cap)
        st_pi = np.empty(stack_cap, dtype=np.int64)
        phi = np.zeros(n_feat)
        x = X[i]
        for t in range(n_trees):
            _tree_shap_one(feat, thr, left, right, val, cov, offsets[t], x, phi,
                           pd, pz, po, pw, plen,
                           st_node, st_lvl, st_pz, st_po, st_pi)
        out[i] = phi
    return out


# ---------------------------------------------------------------------------
# model-level wrappers

@dataclass(frozen=True)
class ShapExplanation:
    """Additive attribution of one margin prediction.

    base_value + sum(values) = margin (up to float tolerance).
    """

    base_value: float
    values: np.ndarray
    margin: float


def _validate_covers(trees):
    for t in trees:
        if t.n_nodes and not np.all(t.cover > 0):
            raise ZeroCoverNode("every node must have cover > 0 to be explained")


def _pack_trees(trees):
    feat = np.concatenate([t.feature.astype(np.int64) for t in trees])
    thr = np.concatenate([t.threshold for t in trees])
    left = np.concatenate([t.left.astype(np.int64) for t in trees])
    right = np.concatenate([t.right.astype(np.int64) for t in trees])
    val = np.concatenate([t.value for t in trees])
    cov = np.concatenate([t.cover for t in trees])
    offsets = np.zeros(len(trees) + 1, dtype=np.int64)
    for i, t in enumerate(trees):
        offsets[i + 1] = offsets[i] + t.n_nodes
    # thresholds of leaves are NaN placeholders; the kernel never reads them,
    # but NaN comparisons are safe either way (x < NaN is False)
    return feat, thr, left, right, val, cov, offsets


def expected_margin(model):
    """Cover-weighted mean margin: base margin + each tree's leaf-cover mean."""
    check_fitted(model, "trees_")
    total = model.base_margin_
    for t in model.trees_:
        leaves = t.feature < 0
        total += float((t.value[leaves] * t.cover[leaves]).sum() / t.cover[0])
    return total


def shap_matrix(model, X):
    """Per-row attributions for a matrix; returns (values, base_value, margins)."""
    check_fitted(model, "trees_")
    X = check_matrix(X, n_features=model.n_features_in_)
    _validate_covers(model.trees_)
    if not model.trees_:
        values = np.zeros_like(X)
    else:
        packed = _pack_trees(model.trees_)
        max_path = max(t.depth() for t in model.trees_) + 1
        values = _shap_kernel(*packed, np.ascontiguousarray(X), max_path)
    return values, expected_margin(model), model.predict_margin(X)


def shap_values(model, x):
    """Explain a single feature vector."""
    values, base, margins = shap_matrix(model, np.asarray(x, dtype=np.float64))
    return ShapExplanation(base_value=base, values=values[0], margin=float(margins[0]))


# ---------------------------------------------------------------------------
# brute-force oracle

def _tree_feature_set(tree):
    return sorted(int(f) for f in np.unique(tree.feature) if f >= 0)


def _descend_expectation(tree, x, fixed):
    def rec(node):
        f = int(tree.feature[node])
        if f < 0:
            return float(tree.value[node])
        if f in fixed:
            nxt = tree.left[node] if x[f] < tree.threshold[node] else tree.right[node]
            return rec(int(nxt))
        lo, hi = int(tree.left[node]), int(tree.right[node])
        c = float(tree.cover[node])
        return (tree.cover[lo] * rec(lo) + tree.cover[hi] * rec(hi)) / c
    return rec(0)


def brute_force_shap(tree, x, n_features=None):
    """Shapley values by subset enumeration over the cover-descent game."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    m = n_features if n_features is not None else x.shape[0]
    feats = _tree_feature_set(tree)
    if len(feats) > 20:
        raise TooManyFeatures(
            f"tree uses {len(feats)} distinct features; enumeration caps at 20"
        )
    phi = np.zeros(m)
    if not feats:
        return phi
    if np.any(tree.cover <= 0):
        raise ZeroCoverNode("every node must have cover > 0 to be explained")
    coalition = {}
    for r in range(len(feats) + 1):
        for subset in combinations(feats, r):
            coalition[subset] = _descend_expectation(tree, x, frozenset(subset))
    n = len(feats)
    for j in feats:
        rest = [f for f in feats if f != j]
        for r in range(len(rest) + 1):
            for subset in combinations(rest, r):
                with_j = tuple(sorted(subset + (j,)))
                weight = math.factorial(r) * math.factorial(n - r - 1) / math.factorial(n)
                phi[j] += weight * (coalition[with_j] - coalition[subset])
    return phi


# ---------------------------------------------------------------------------
# global importance

@dataclass(frozen=True)
class ImportanceEntry:
    rank: int
    feature: str
    mean_abs_shap: float


@dataclass(frozen=True)
class ImportanceRanking:
    entries: tuple

    def __iter__(self):
        return iter(self.entries)

    def top(self, k):
        return self.entries[:k]

    def feature_order(self):
        return tuple(e.feature for e in self.entries)


def global_importance(model, ds):
    """Mean |attribution| per feature over a dataset, ranked descending.

    Gain ties resolve to schema order, so dormant features line up stably
    at the bottom.
    """
    if len(ds) == 0:
        raise EmptyDataset("cannot rank feature importance over an empty dataset")
    values, _, _ = shap_matrix(model, ds.X)
    mean_abs = np.abs(values).mean(axis=0)
    order = sorted(range(len(ds.schema)), key=lambda j: (-mean_abs[j], j))
    entries = tuple(
        ImportanceEntry(rank=r + 1, feature=ds.schema[j], mean_abs_shap=float(mean_abs[j]))
        for r, j in enumerate(order)
    )
    return ImportanceRanking(entries=entries)


# ---------------------------------------------------------------------------
# report writers

def write_importance_csv(ranking, path):
    lines = ["rank,feature,mean_abs_shap"]
    for e in ranking:
        lines.append(f"{e.rank},{e.feature},{float(e.mean_abs_shap)!s}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_explanations_csv(ds, values, base_value, margins, path):
    header = "timestamp,base_value," + ",".join(ds.schema) + ",margin"
    lines = [header]
    stamps = np.datetime_as_string(ds.timestamps.astype("datetime64[s]"), unit="s")
    for i in range(len(ds)):
        cells = [stamps[i], str(float(base_value))]
        cells += [str(float(v)) for v in values[i]]
        cells.append(str(float(margins[i])))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
