"""Elastic net by cyclic coordinate descent with k-fold CV over a λ path.

Covariates are standardized to zero mean / unit variance internally;
reported coefficients are mapped back to the raw scale (slopes, then
intercept). The penalty follows the 1/(2n) least-squares convention:

    (1/2n)·RSS + λ·(α·|w|₁ + (1-α)/2·|w|₂²)          (gaussian)
    -(1/n)·loglik + same penalty                      (binomial)

Coordinate updates run in covariance mode (p x p Gram, O(p) per update),
which keeps a full warm-started path cheap.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateTargetError
from .linear import _sigmoid

MAX_PASSES = 100_000
COEF_TOL = 1e-11
ALPHA_FLOOR = 1e-3  # λ_max divisor when alpha == 0 (ridge has no finite λ_max)


def _standardize(X):
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (X - mean) / scale, mean, scale


def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def cd_gaussian_gram(G, xty, w, alpha, lam, n):
    """Cyclic CD passes on Gram sufficient statistics; w updated in place.

    G = Xs'Xs, xty = Xs'y_centered. grad tracks (xty - G w)/n.
    """
    p = w.size
    denom = 1.0 + lam * (1.0 - alpha)
    thresh = lam * alpha
    grad = (xty - G @ w) / n
    for it in range(1, MAX_PASSES + 1):
        max_delta = 0.0
        for j in range(p):
            wj = w[j]
            new = _soft(grad[j] + wj, thresh) / denom
            if new != wj:
                grad -= G[:, j] * ((new - wj) / n)
                delta = abs(new - wj)
                if delta > max_delta:
                    max_delta = delta
                w[j] = new
        if max_delta < COEF_TOL:
            return it
        if it % 256 == 0:  # refresh against float drift on long runs
            grad = (xty - G @ w) / n
    return MAX_PASSES


def kkt_violation_gaussian(Xs, yc, w, alpha, lam):
    """Largest violation of the soft-threshold subgradient conditions,
    computed from the raw standardized data (independent of the Gram path)."""
    n = yc.size
    grad = -(Xs.T @ (yc - Xs @ w)) / n
    worst = 0.0
    for j in range(w.size):
        g = grad[j] + lam * (1.0 - alpha) * w[j]
        if w[j] != 0.0:
            worst = max(worst, abs(g + lam * alpha * np.sign(w[j])))
        else:
            worst = max(worst, max(abs(grad[j]) - lam * alpha, 0.0))
    return worst


def enet_gaussian_path(Xs, yc, alpha, lambdas, w0=None):
    """Warm-started coefficient path over a decreasing λ grid."""
    n, p = Xs.shape
    G = Xs.T @ Xs
    xty = Xs.T @ yc
    w = np.zeros(p) if w0 is None else w0.copy()
    path = np.empty((len(lambdas), p))
    for k, lam in enumerate(lambdas):
        cd_gaussian_gram(G, xty, w, alpha, lam, n)
        path[k] = w
    return path


def enet_binomial_fit(Xs, y, alpha, lam, w0=None, b0=None,
                      max_outer=60, outer_tol=1e-9):
    """Penalized logistic fit at one λ: IRLS outer loop, CD inner loop on
    the weighted sufficient statistics."""
    n, p = Xs.shape
    w = np.zeros(p) if w0 is None else w0.copy()
    b = (np.log(y.mean() / (1.0 - y.mean())) if b0 is None else b0)
    thresh = lam * alpha
    for _ in range(max_outer):
        eta = b + Xs @ w
        prob = _sigmoid(eta)
        v = np.maximum(prob * (1.0 - prob), 1e-5)
        z = eta + (y - prob) / v
        Xv = Xs * v[:, None]
        Gv = Xv.T @ Xs
        xsq = np.diag(Gv).copy()
        svx = v @ Xs
        svz = Xv.T @ z
        sv = v.sum()
        vz_sum = v @ z
        max_change = 0.0
        for _inner in range(200):
            inner_delta = 0.0
            gw = Gv @ w
            for j in range(p):
                wj = w[j]
                rho = (svz[j] - b * svx[j] - gw[j]) / n + (xsq[j] / n) * wj
                new = _soft(rho, thresh) / (xsq[j] / n + lam * (1.0 - alpha))
                if new != wj:
                    gw += Gv[:, j] * (new - wj)
                    inner_delta = max(inner_delta, abs(new - wj))
                    w[j] = new
            db = (vz_sum - svx @ w) / sv - b
            if db != 0.0:
                b += db
                inner_delta = max(inner_delta, abs(db))
            max_change = max(max_change, inner_delta)
            if inner_delta < 1e-10:
                break
        if max_change < outer_tol:
            break
    return w, b


def _lambda_grid(Xs, resid0, alpha, grid_size, n):
    lam_max = np.max(np.abs(Xs.T @ resid0)) / n / max(alpha, ALPHA_FLOOR)
    lam_max = max(lam_max, 1e-12)
    return np.logspace(np.log10(lam_max), np.log10(lam_max * 1e-4), grid_size)


def _fold_ids(n, folds, rng):
    perm = rng.permutation(n)
    ids = np.empty(n, dtype=np.int64)
    for k, chunk in enumerate(np.array_split(perm, folds)):
        ids[chunk] = k
    return ids


def fit_elastic_net(X, y, classification, alpha, grid_size, folds, seed):
    """CV-selected elastic net. Returns raw-scale coef (slopes + intercept),
    the λ grid, per-λ mean CV deviance, and the standardized path."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if classification and (y.sum() == 0 or y.sum() == n):
        raise DegenerateTargetError("categorical target has a single class")
    rng = np.random.default_rng(seed)
    fold_of = _fold_ids(n, folds, rng)

    Xs_full, mean_full, scale_full = _standardize(X)
    # null-model residual fixes lambda_max for both targets
    lambdas = _lambda_grid(Xs_full, y - y.mean(), alpha, grid_size, n)

    deviance = np.zeros(len(lambdas))
    for k in range(folds):
        tr = fold_of != k
        te = ~tr
        Xs, mu, sd = _standardize(X[tr])
        Xte = (X[te] - mu) / sd
        if classification:
            ytr = y[tr]
            if ytr.sum() == 0 or ytr.sum() == ytr.size:
                continue  # degenerate fold: leaves this fold out of the mean
            w = np.zeros(Xs.shape[1])
            b = None
            yte = y[te]
            for i, lam in enumerate(lambdas):
                w, b = enet_binomial_fit(Xs, ytr, alpha, lam, w0=w, b0=b)
                prob = np.clip(_sigmoid(b + Xte @ w), 1e-12, 1 - 1e-12)
                deviance[i] += -2.0 * np.mean(
                    yte * np.log(prob) + (1 - yte) * np.log(1 - prob)) / folds
        else:
            yc = y[tr] - y[tr].mean()
            path = enet_gaussian_path(Xs, yc, alpha, lambdas)
            preds = y[tr].mean() + Xte @ path.T
            deviance += np.mean((y[te][:, None] - preds) ** 2, axis=0) / folds

    best = int(np.argmin(deviance))
    lam = float(lambdas[best])
    if classification:
        w = np.zeros(Xs_full.shape[1])
        b = None
        for i in range(best + 1):  # warm start down the path
            w, b = enet_binomial_fit(Xs_full, y, alpha, lambdas[i], w0=w, b0=b)
        path = None
        slopes = w / scale_full
        intercept = b - slopes @ mean_full
    else:
        yc = y - y.mean()
        path = enet_gaussian_path(Xs_full, yc, alpha, lambdas)
        w = path[best]
        slopes = w / scale_full
        intercept = y.mean() - slopes @ mean_full
    coef = np.append(slopes, intercept)
    return {
        "coef": coef,
        "lambda": lam,
        "lambda_grid": lambdas,
        "cv_deviance": deviance,
        "alpha": alpha,
        "std_coef": w,
        "std_mean": mean_full,
        "std_scale": scale_full,
        "path": path,
    }


def fit_enet_gaussian_at(X, y, alpha, lam):
    """Single-λ gaussian fit (no CV); used for degeneracy/KKT checks."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Xs, mean, scale = _standardize(X)
    yc = y - y.mean()
    w = np.zeros(X.shape[1])
    cd_gaussian_gram(Xs.T @ Xs, Xs.T @ yc, w, alpha, lam, y.size)
    slopes = w / scale
    intercept = y.mean() - slopes @ mean
    return {"coef": np.append(slopes, intercept), "std_coef": w,
            "Xs": Xs, "yc": yc}
