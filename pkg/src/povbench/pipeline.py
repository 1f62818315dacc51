"""End-to-end scenario execution: model, predict, classify, score.

A scenario fixes a dataset, a missingness mask, a model spec, a poverty-line
quantile and a probability cutpoint. The model is always fit on rows with
observed income; predictions and scoring run on the masked rows (or on all
rows for full-sample baselines). The poverty line always comes from the
full, uncorrupted income distribution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import models as M
from .dataset import Dataset, label_poor, poverty_line
from .errors import (AlignmentError, DataValidationError,
                     DegenerateTargetError, PovbenchError)
from .evaluation import ConfusionMatrix, ObjectiveReport, confusion, metrics
from .missingness import MissingnessMask

AUTO_YOUDEN = "youden"

PREDICT_ON_MISSING = "missing_rows"
PREDICT_ON_ALL = "all_rows"


@dataclass(frozen=True)
class Scenario:
    dataset: Dataset
    mask: MissingnessMask
    spec: M.ModelSpec
    q: float
    cutpoint: float | str = 0.5   # probability cutpoint or AUTO_YOUDEN
    seed: int = 0
    predict_on: str = PREDICT_ON_MISSING


@dataclass
class ScenarioResult:
    predictions: np.ndarray
    poor_flags: np.ndarray
    confusion: ConfusionMatrix
    metrics: ObjectiveReport
    predicted_rate: float
    true_rate: float
    cutpoint: float | None
    poverty_line: float
    dropped_regressors: tuple
    fit_warnings: tuple
    model: "M.FittedModel" = None
    eval_index: np.ndarray = None


def classify_continuous(pred_income, z):
    """Poor iff predicted log income <= ln z (boundary inclusive)."""
    if not (z > 0 and math.isfinite(z)):
        raise DataValidationError(f"poverty line must be positive finite, got {z}")
    preds = np.asarray(pred_income, dtype=np.float64)
    return (preds <= math.log(z)).astype(np.int64)


def classify_categorical(pred_prob, cutpoint):
    """Poor iff predicted probability > cutpoint (strict)."""
    if not 0.0 < cutpoint < 1.0:
        raise DataValidationError(f"cutpoint must be in (0,1), got {cutpoint}")
    probs = np.asarray(pred_prob, dtype=np.float64)
    if np.any(probs < 0) or np.any(probs > 1):
        raise DataValidationError("probabilities outside [0,1]")
    return (probs > cutpoint).astype(np.int64)


def error_adjusted_rate(m: M.FittedModel, X_test, z, draws, seed) -> float:
    """Population poverty rate with training residuals resampled back in.

    Each test row's poverty probability is the share of `draws` residual
    re-additions that land at or below ln z; the returned rate averages
    these probabilities (x100). Per-row probabilities are intentionally
    not exposed: the adjustment is a population-level estimator.
    """
    if m.train_residuals is None or len(m.train_residuals) == 0:
        raise DataValidationError(
            "error adjustment needs a continuous model with stored residuals")
    if draws < 1:
        raise DataValidationError(f"draws must be >= 1, got {draws}")
    preds = M.predict(m, X_test)
    rng = np.random.default_rng(seed)
    resid = np.asarray(m.train_residuals)
    lnz = math.log(z)
    hits = 0.0
    for _ in range(draws):
        r = rng.choice(resid, size=preds.size, replace=True)
        hits += np.mean(preds + r <= lnz)
    return 100.0 * hits / draws


def error_adjusted_rate_categorical(pred_prob, draws, seed) -> float:
    """Stochastic analogue for probability models: average poverty rate over
    Bernoulli draws from the predicted probabilities."""
    if draws < 1:
        raise DataValidationError(f"draws must be >= 1, got {draws}")
    probs = np.asarray(pred_prob, dtype=np.float64)
    rng = np.random.default_rng(seed)
    hits = 0.0
    for _ in range(draws):
        hits += np.mean(rng.random(probs.size) < probs)
    return 100.0 * hits / draws


def roc_curve(pred_prob, truth):
    """(cutpoint, sensitivity, specificity) at every distinct predicted
    probability plus the 0 and 1 endpoints; classification is prob > cut."""
    probs = np.asarray(pred_prob, dtype=np.float64)
    truth = np.asarray(truth)
    if probs.shape != truth.shape:
        raise AlignmentError("probability/truth length mismatch")
    pos = truth == 1
    n_pos = int(pos.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateTargetError("ROC needs both classes in the truth")
    cuts = np.unique(probs)
    cuts = np.unique(np.concatenate([[0.0], cuts, [1.0]]))
    points = []
    for c in cuts:
        flagged = probs > c
        sens = np.sum(flagged & pos) / n_pos
        spec = np.sum(~flagged & ~pos) / n_neg
        points.append((float(c), float(sens), float(spec)))
    return points


def youden_cutpoint(roc):
    """Cutpoint maximizing J = sensitivity + specificity - 1; ties go to the
    cutpoint closest to the conventional 0.5."""
    best_c, best_j = None, -np.inf
    for c, sens, spec in roc:
        j = sens + spec - 1.0
        if j > best_j or (j == best_j and abs(c - 0.5) < abs(best_c - 0.5)):
            best_c, best_j = c, j
    return best_c, best_j


def auc(roc) -> float:
    """Trapezoid area under the ROC curve (sensitivity vs 1-specificity)."""
    pts = sorted((1.0 - spec, sens) for _, sens, spec in roc)
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    return float(trapezoid(ys, xs))


def _train_design(ds, spec, train_idx):
    """Training design; regressors constant on the training rows are dropped
    for the closed-form linear families (they would otherwise make the
    design singular when a pattern wipes out a whole covariate class)."""
    X = ds.design_matrix(spec.regressor_order)[train_idx]
    if spec.family in (M.OLS, M.LOGIT, M.ELASTIC_NET):
        keep = [j for j in range(X.shape[1])
                if X[:, j].min() != X[:, j].max()]
        dropped = tuple(spec.regressor_order[j] for j in range(X.shape[1])
                        if j not in keep)
        if dropped:
            order = tuple(n for n in spec.regressor_order if n not in dropped)
            spec = replace(spec, regressor_order=order)
        return spec, dropped
    return spec, ()


def run_scenario(s: Scenario) -> ScenarioResult:
    """Fit on observed rows, predict on the scenario's evaluation rows,
    classify, and score against the true labels."""
    ds = s.dataset
    if s.mask.missing.size != ds.n:
        raise AlignmentError("mask does not align with dataset")
    z = poverty_line(ds, s.q)
    train_idx = np.flatnonzero(~s.mask.missing)
    if s.predict_on == PREDICT_ON_ALL:
        eval_idx = np.arange(ds.n)
    elif s.predict_on == PREDICT_ON_MISSING:
        eval_idx = np.flatnonzero(s.mask.missing)
    else:
        raise DataValidationError(f"unknown predict_on {s.predict_on!r}")
    if train_idx.size == 0 or eval_idx.size == 0:
        raise DataValidationError("scenario has an empty train or eval set")

    spec, dropped = _train_design(ds, s.spec, train_idx)
    X_all = ds.design_matrix(spec.regressor_order)
    categorical = spec.target == M.CATEGORICAL
    if categorical:
        y_train = label_poor(ds, z)[train_idx].astype(np.float64)
    else:
        y_train = ds.log_income[train_idx]

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            fitted = M.fit(spec, X_all[train_idx], y_train, seed=s.seed)
        except PovbenchError as exc:
            raise type(exc)(
                f"scenario({spec.code}, {s.mask.pattern}, q={s.q}): {exc}"
            ) from exc
    fit_warnings = tuple(str(w.message) for w in caught)

    preds = M.predict(fitted, X_all[eval_idx])
    if categorical:
        if s.cutpoint == AUTO_YOUDEN:
            train_probs = M.predict(fitted, X_all[train_idx])
            cut, _ = youden_cutpoint(roc_curve(train_probs, y_train))
            cut = min(max(cut, 1e-9), 1 - 1e-9)
        else:
            cut = float(s.cutpoint)
        flags = classify_categorical(preds, cut)
    else:
        cut = None
        flags = classify_continuous(preds, z)

    truth = label_poor(ds, z)[eval_idx]
    cm = confusion(truth, flags)
    rep = metrics(cm)
    return ScenarioResult(
        predictions=preds,
        poor_flags=flags,
        confusion=cm,
        metrics=rep,
        predicted_rate=rep.pred_poverty,
        true_rate=100.0 * (cm.tp + cm.fn) / cm.total,
        cutpoint=cut,
        poverty_line=z,
        dropped_regressors=dropped,
        fit_warnings=fit_warnings,
        model=fitted,
        eval_index=eval_idx,
    )
