"""Hyperparameter grid search scored on a held-out random half.

Every point of the Cartesian product of axes is fit on sample 1 and scored
on sample 2 after classification at the full-data poverty line (cutpoint
0.5 for categorical targets). No early stopping; an optional wall-clock
budget aborts cleanly with a partial table.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import models as M
from .dataset import Dataset, label_poor, poverty_line
from .errors import ConfigError, DataValidationError, PovbenchError
from .pipeline import classify_categorical, classify_continuous

log = logging.getLogger(__name__)

# Grid ranges of the full search, per family.
DEFAULT_AXES = {
    M.RANDOM_FOREST: {
        "trees": [50, 100, 200, 400],
        "mtry": list(range(1, 13)),
        "max_depth": [3, 4, 5, 6, 7, 8],
        "min_leaf": [5, 10, 50, 100],
    },
    M.ELASTIC_NET: {
        "alpha": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
        "lambda_grid_size": [50, 100, 200],
        "cv_folds": [5, 10, 20],
    },
    M.MLP2: {
        "layer1": [64, 128, 256],
        "layer2": [64, 128, 256],
        "learning_rate": [0.01, 0.001],
        "batch_size": [20, 80],
        "epochs": [50, 200],
    },
}

# Thinned desk-scale grids: same axes, fewer points, single-restart MLP.
DESK_AXES = {
    M.RANDOM_FOREST: {
        "trees": [50],
        "mtry": [3, 6],
        "max_depth": [4, 8],
        "min_leaf": [5, 50],
    },
    M.ELASTIC_NET: {
        "alpha": [0.0, 0.5, 1.0],
        "lambda_grid_size": [50, 100],
        "cv_folds": [5, 10],
    },
    M.MLP2: {
        "layer1": [64, 128],
        "layer2": [64],
        "learning_rate": [0.01, 0.001],
        "batch_size": [80],
        "epochs": [30],
    },
}


@dataclass(frozen=True)
class GridSpec:
    family: str
    target: str
    axes: dict
    objective: str = "accuracy"
    split_seed: int = 0

    def __post_init__(self):
        if not self.axes:
            raise ConfigError("grid axes must be non-empty")
        if self.family not in DEFAULT_AXES:
            raise ConfigError(f"no grid defined for family {self.family!r}")

    @classmethod
    def default(cls, family, target, split_seed=0):
        return cls(family, target, DEFAULT_AXES[family], split_seed=split_seed)

    @classmethod
    def desk(cls, family, target, split_seed=0):
        return cls(family, target, DESK_AXES[family], split_seed=split_seed)


@dataclass
class GridSearchResult:
    best_params: dict
    best_score: float
    score_table: list            # (params dict, score or None)
    summary: dict = field(default_factory=dict)
    completed: bool = True
    failed_points: int = 0

    def recompute_summary(self):
        scores = [s for _, s in self.score_table if s is not None]
        self.summary = {
            "max": max(scores) if scores else None,
            "mean": float(np.mean(scores)) if scores else None,
            "sd": float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0,
        }
        return self.summary


def half_split(ds: Dataset, seed: int):
    """Disjoint uniformly-random halves (sizes ceil(n/2), floor(n/2))."""
    if ds.n < 2:
        raise DataValidationError("need at least 2 rows to split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n)
    k = math.ceil(ds.n / 2)
    return ds.subset(np.sort(perm[:k])), ds.subset(np.sort(perm[k:]))


def _hyper_for(family, point):
    hp = M.HyperParams()
    if family == M.RANDOM_FOREST:
        return M.with_rf(hp, **point)
    if family == M.ELASTIC_NET:
        return M.with_en(hp, **point)
    if family == M.MLP2:
        # desk/full grids train each point once; restarts are a baseline knob
        return M.with_mlp(hp, max_restarts=1, **point)
    raise ConfigError(f"no grid support for family {family!r}")


def grid_search(gs: GridSpec, ds: Dataset, q: float,
                budget_seconds: float | None = None) -> GridSearchResult:
    """Exhaustive scan of the axes' Cartesian product.

    Points are scored by the objective (accuracy) on sample 2; fit failures
    score None and are excluded from the summary. Per-point RNG streams are
    derived from (split_seed, point index).
    """
    if gs.objective != "accuracy":
        raise ConfigError(f"unsupported grid objective {gs.objective!r}")
    start_time = time.monotonic()
    sample1, sample2 = half_split(ds, gs.split_seed)
    z = poverty_line(ds, q)
    X1 = sample1.design_matrix()
    X2 = sample2.design_matrix()
    truth2 = label_poor(sample2, z)
    categorical = gs.target == M.CATEGORICAL
    if categorical:
        y1 = label_poor(sample1, z).astype(np.float64)
        if y1.sum() in (0, y1.size):
            raise DataValidationError("training half has a single class")
    else:
        y1 = sample1.log_income

    names = sorted(gs.axes)
    values = [gs.axes[k] for k in names]
    table = []
    best_params, best_score = None, -np.inf
    completed = True
    failed = 0
    for index, combo in enumerate(itertools.product(*values)):
        if budget_seconds is not None and index > 0:
            if time.monotonic() - start_time > budget_seconds:
                log.warning("grid budget exhausted after %d points", index)
                completed = False
                break
        point = dict(zip(names, combo))
        spec = M.ModelSpec(gs.family, gs.target, _hyper_for(gs.family, point),
                           ds.regressor_order)
        seed = int(np.random.SeedSequence([gs.split_seed, index])
                   .generate_state(1)[0])
        try:
            fitted = M.fit(spec, X1, y1, seed=seed)
            preds = M.predict(fitted, X2)
            if categorical:
                flags = classify_categorical(preds, 0.5)
            else:
                flags = classify_continuous(preds, z)
            score = 100.0 * float(np.mean(flags == truth2))
        except PovbenchError as exc:
            log.warning("grid point %s failed: %s", point, exc)
            table.append((point, None))
            failed += 1
            continue
        table.append((point, score))
        if score > best_score:
            best_score, best_params = score, point

    result = GridSearchResult(best_params=best_params, best_score=best_score,
                              score_table=table, completed=completed,
                              failed_points=failed)
    result.recompute_summary()
    return result
