"""Imbalance-aware evaluation: ranking metrics, thresholded reports, calibration.

Zero-denominator conventions (all stated, all exercised by rare-event sites):
precision, recall, F1 and MCC report 0 when undefined; a single-class input
yields AUC 0.5 and, with no positives, AUPRC 0. Ties at the decision
threshold count as positive (score >= threshold).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NoPositives, SingleClass, UnachievableRecall
from .validation import check_labels


def _scores_labels(scores, labels):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = check_labels(labels, n_samples=s.shape[0])
    return s, y


def _midranks(s):
    """1-based ranks with ties sharing their block's average rank."""
    n = s.shape[0]
    order = np.argsort(s, kind="mergesort")
    ss = s[order]
    new_block = np.r_[True, ss[1:] != ss[:-1]]
    starts = np.flatnonzero(new_block)
    ends = np.r_[starts[1:], n] - 1
    mid = 0.5 * (starts + ends) + 1.0  # halves are exact in binary floats
    ranks = np.empty(n)
    ranks[order] = mid[np.cumsum(new_block) - 1]
    return ranks


def roc_auc(scores, labels):
    """Probability a random positive outranks a random negative (ties = 1/2).

    Computed from midranks, which is identical -- bit for bit -- to counting
    all positive/negative pairs.
    """
    s, y = _scores_labels(scores, labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("roc_auc needs both classes")
    ranks = _midranks(s)
    pos_rank_sum = float(ranks[y == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _descending_blocks(s, y):
    """Cumulative tp / total counts at each distinct score, descending."""
    order = np.argsort(-s, kind="mergesort")
    ys = y[order]
    ss = s[order]
    block_end = np.r_[ss[1:] != ss[:-1], True]
    cum_tp = np.cumsum(ys)[block_end].astype(np.float64)
    cum_all = np.flatnonzero(block_end) + 1.0
    thresholds = ss[block_end]
    return thresholds, cum_tp, cum_all


def average_precision(scores, labels):
    """Step-sum of precision x recall increments over descending score blocks."""
    s, y = _scores_labels(scores, labels)
    n_pos = int((y == 1).sum())
    if n_pos == 0:
        raise NoPositives("average_precision needs at least one positive")
    _, cum_tp, cum_all = _descending_blocks(s, y)
    precision = cum_tp / cum_all
    recall = cum_tp / n_pos
    d_recall = np.diff(np.r_[0.0, recall])
    return float(np.sum(d_recall * precision))


def roc_points(scores, labels):
    """(fpr, tpr) per distinct threshold, descending, prepended with (0, 0)."""
    s, y = _scores_labels(scores, labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    _, cum_tp, cum_all = _descending_blocks(s, y)
    cum_fp = cum_all - cum_tp
    tpr = cum_tp / n_pos if n_pos else np.zeros_like(cum_tp)
    fpr = cum_fp / n_neg if n_neg else np.zeros_like(cum_fp)
    pts = [(0.0, 0.0)]
    pts.extend((float(a), float(b)) for a, b in zip(fpr, tpr))
    return pts


def pr_points(scores, labels):
    """(recall, precision) per distinct threshold, descending."""
    s, y = _scores_labels(scores, labels)
    n_pos = int((y == 1).sum())
    _, cum_tp, cum_all = _descending_blocks(s, y)
    precision = cum_tp / cum_all
    recall = cum_tp / n_pos if n_pos else np.zeros_like(cum_tp)
    return [(float(r), float(p)) for r, p in zip(recall, precision)]


@dataclass(frozen=True)
class EvalReport:
    auc: float
    auprc: float
    threshold: float
    precision: float
    recall: float
    f1: float
    mcc: float
    confusion: dict  # {tp, fp, tn, fn}
    roc_points: tuple
    pr_points: tuple
    base_rate: float

    def to_dict(self):
        d = asdict(self)
        d["roc_points"] = [list(p) for p in self.roc_points]
        d["pr_points"] = [list(p) for p in self.pr_points]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["roc_points"] = tuple(tuple(p) for p in d["roc_points"])
        d["pr_points"] = tuple(tuple(p) for p in d["pr_points"])
        return cls(**d)


def _mcc(tp, fp, tn, fn):
    factors = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if factors == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(factors)


def classification_report(scores, labels, threshold=0.5):
    """Thresholded metrics plus full ROC/PR point lists.

    Degenerate inputs never raise here: single-class data reports AUC 0.5,
    and AUPRC 0 with no positives.
    """
    s, y = _scores_labels(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    tn = int(np.sum(~pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    n_pos, n_neg = tp + fn, fp + tn
    auc = roc_auc(s, y) if n_pos and n_neg else 0.5
    auprc = average_precision(s, y) if n_pos else 0.0
    return EvalReport(
        auc=float(auc),
        auprc=float(auprc),
        threshold=float(threshold),
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        mcc=float(_mcc(tp, fp, tn, fn)),
        confusion={"tp": tp, "fp": fp, "tn": tn, "fn": fn},
        roc_points=tuple(roc_points(s, y)),
        pr_points=tuple(pr_points(s, y)),
        base_rate=float(y.mean()) if y.size else 0.0,
    )


@dataclass(frozen=True)
class CalibrationResult:
    threshold: float
    report: EvalReport


def calibrate_threshold(scores, labels, objective="max_f1"):
    """Pick a decision threshold by scanning every distinct score.

    objective is "max_f1" (F1 ties resolve to the higher threshold) or
    ("min_recall", r): the highest threshold whose recall reaches r.
    """
    s, y = _scores_labels(scores, labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("calibration needs both classes")
    thresholds, cum_tp, cum_all = _descending_blocks(s, y)
    cum_fp = cum_all - cum_tp
    precision = cum_tp / cum_all
    recall = cum_tp / n_pos

    if objective == "max_f1":
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.where(denom > 0, denom, 1.0), 0.0)
        best = int(np.argmax(f1))  # first max = highest threshold
        chosen = float(thresholds[best])
    else:
        kind, target = objective
        if kind != "min_recall":
            raise ValueError(f"unknown calibration objective {objective!r}")
        hits = np.flatnonzero(recall >= target)
        if hits.size == 0:
            raise UnachievableRecall(
                f"no threshold reaches recall {target}; best is {recall.max():.4f}"
            )
        chosen = float(thresholds[hits[0]])
    return CalibrationResult(threshold=chosen, report=classification_report(s, y, chosen))


def write_roc_csv(report, path):
    lines = ["fpr,tpr"]
    lines += [f"{float(a)!s},{float(b)!s}" for a, b in report.roc_points]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_pr_csv(report, path):
    lines = ["recall,precision"]
    lines += [f"{float(a)!s},{float(b)!s}" for a, b in report.pr_points]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_json(report, path):
    with open(path, "w") as fh:
        fh.write(report.to_json())


def load_report_json(path):
    with open(path) as fh:
        return EvalReport.from_dict(json.load(fh))
