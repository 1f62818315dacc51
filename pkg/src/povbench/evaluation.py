"""Confusion-matrix objectives, significance test, and model ranking.

All rates are percentages. Leakage is the false-positive rate (non-poor
predicted poor), undercoverage the false-negative rate (poor predicted
non-poor); they complement specificity and sensitivity exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import AlignmentError, DataValidationError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise DataValidationError("confusion counts must be non-negative")
        if self.total == 0:
            raise DataValidationError("confusion matrix is empty")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class ObjectiveReport:
    pred_poverty: float
    diff_abs: float
    t_stat: float
    pref_tp: float
    pref_tn: float
    leakage: float | None
    undercoverage: float | None
    sensitivity: float | None
    specificity: float | None
    precision: float | None
    accuracy: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def confusion(truth, pred) -> ConfusionMatrix:
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape:
        raise AlignmentError(
            f"truth length {truth.size} != pred length {pred.size}")
    if not (np.all((truth == 0) | (truth == 1))
            and np.all((pred == 0) | (pred == 1))):
        raise DataValidationError("confusion inputs must be binary")
    t = truth.astype(bool)
    p = pred.astype(bool)
    return ConfusionMatrix(
        tp=int(np.sum(t & p)),
        tn=int(np.sum(~t & ~p)),
        fp=int(np.sum(~t & p)),
        fn=int(np.sum(t & ~p)),
    )


def _rate(num, den):
    return 100.0 * num / den if den > 0 else None


def weighted_preference(cm: ConfusionMatrix, a: float, b: float) -> float:
    """100 * (a*TP + b*TN) / N; reduces to accuracy at a = b = 1."""
    if a < 0 or b < 0:
        raise DataValidationError("preference weights must be non-negative")
    return 100.0 * (a * cm.tp + b * cm.tn) / cm.total


def ttest_from_counts(cm: ConfusionMatrix) -> float:
    """Paired t on per-row differences d_i = truth_i - pred_i.

    d is +1 on false negatives, -1 on false positives, else 0, so the
    statistic only depends on the counts.
    """
    n = cm.total
    if n < 2:
        raise DataValidationError("need at least 2 rows for the t-test")
    mean_d = (cm.fn - cm.fp) / n
    ssq = cm.fn + cm.fp  # sum of d_i^2
    var = (ssq - n * mean_d ** 2) / (n - 1)
    if var <= 0:
        if mean_d == 0:
            return 0.0
        return math.inf if mean_d > 0 else -math.inf
    return mean_d / math.sqrt(var / n)


def paired_ttest(truth, pred) -> float:
    """t statistic for the mean of truth_i - pred_i (sd with n-1)."""
    return ttest_from_counts(confusion(truth, pred))


def metrics(cm: ConfusionMatrix) -> ObjectiveReport:
    """Every objective function, as percentages. Rates with a zero
    denominator come back as None rather than raising."""
    n = cm.total
    pred_rate = 100.0 * (cm.tp + cm.fp) / n
    true_rate = 100.0 * (cm.tp + cm.fn) / n
    return ObjectiveReport(
        pred_poverty=pred_rate,
        diff_abs=abs(true_rate - pred_rate),
        t_stat=ttest_from_counts(cm),
        pref_tp=weighted_preference(cm, 1.25, 0.75),
        pref_tn=weighted_preference(cm, 0.75, 1.25),
        leakage=_rate(cm.fp, cm.fp + cm.tn),
        undercoverage=_rate(cm.fn, cm.fn + cm.tp),
        sensitivity=_rate(cm.tp, cm.fn + cm.tp),
        specificity=_rate(cm.tn, cm.tn + cm.fp),
        precision=_rate(cm.tp, cm.tp + cm.fp),
        accuracy=100.0 * (cm.tp + cm.tn) / n,
    )


def true_rate(cm: ConfusionMatrix) -> float:
    return 100.0 * (cm.tp + cm.fn) / cm.total


def rank_models(scores: dict, direction: str) -> dict:
    """Competition ranking: best = 1, ties share the lower rank, the next
    rank skips. Models with an undefined (None) metric rank last."""
    if direction not in ("min", "max"):
        raise DataValidationError(f"direction must be min or max, got {direction}")
    if len(scores) < 2:
        raise DataValidationError("need at least 2 models to rank")
    defined = {k: v for k, v in scores.items() if v is not None}
    sign = 1.0 if direction == "min" else -1.0
    ordered = sorted(defined, key=lambda k: sign * defined[k])
    ranks = {}
    for pos, k in enumerate(ordered):
        if pos > 0 and defined[k] == defined[ordered[pos - 1]]:
            ranks[k] = ranks[ordered[pos - 1]]
        else:
            ranks[k] = pos + 1
    worst = len(ordered) + 1
    for k in scores:
        if k not in ranks:
            ranks[k] = worst  # undefined metric: flagged last
    return ranks


# Table row names (and rank direction) in report order.
REPORT_ROWS = (
    ("Observations", None, None),
    ("TruePovRate", None, None),
    ("PredPoverty", None, None),
    ("Diff.(absmin)", "diff_abs", "min"),
    ("Diff.(tstat)", "t_stat", None),
    ("PrefTruePos(max)", "pref_tp", "max"),
    ("PrefTrueNeg(max)", "pref_tn", "max"),
    ("TruePos(max)", "tp", "max"),
    ("TrueNeg(max)", "tn", "max"),
    ("FalsePos(min)", "fp", "min"),
    ("FalseNeg(min)", "fn", "min"),
    ("Leakage(min)", "leakage", "min"),
    ("Undercoverage(min)", "undercoverage", "min"),
    ("Sensitivity(max)", "sensitivity", "max"),
    ("Specificity(max)", "specificity", "max"),
    ("Precision(max)", "precision", "max"),
    ("Accuracy(max)", "accuracy", "max"),
)
