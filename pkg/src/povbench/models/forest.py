"""Random forest (bagged CART) for continuous and binary targets."""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import DegenerateTargetError


def fit_forest(X, y, trees, mtry, max_depth, min_leaf, classification, seed):
    """Grow `trees` CART trees on bootstrap resamples.

    Per-tree RNG streams are spawned from the seed so results do not depend
    on fitting order. Returns a list of array-form trees.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if classification and (y.sum() == 0 or y.sum() == n):
        raise DegenerateTargetError("categorical target has a single class")
    mtry = min(mtry, p)
    forest = []
    for child in np.random.SeedSequence(seed).spawn(trees):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, n, size=n)
        Xb = X[boot]
        yb = y[boot]
        orders = np.empty((p, n), dtype=np.int64)
        for f in range(p):
            orders[f] = np.argsort(Xb[:, f], kind="stable")
        tree = _kernels.build_tree(Xb, yb, orders, mtry, max_depth,
                                   min_leaf, classification, rng)
        forest.append(tree)
    return forest


def predict_tree(tree, X):
    """Vectorized traversal of one array-form tree."""
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    feature = tree["feature"]
    while True:
        internal = feature[node] >= 0
        if not internal.any():
            break
        idx = np.flatnonzero(internal)
        cur = node[idx]
        go_left = X[idx, feature[cur]] <= tree["threshold"][cur]
        node[idx] = np.where(go_left, tree["left"][cur], tree["right"][cur])
    return tree["value"][node]


def predict_forest(forest, X):
    """Mean of per-tree predictions (class-1 leaf share for classification)."""
    out = np.zeros(np.asarray(X).shape[0], dtype=np.float64)
    for tree in forest:
        out += predict_tree(tree, X)
    return out / len(forest)
