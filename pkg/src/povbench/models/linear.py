"""OLS and logistic regression (IRLS) solved from first principles."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from ..errors import DegenerateTargetError, FitConvergenceWarning, SingularDesignError


def add_intercept(X):
    """Append a column of ones (intercept is the last coefficient)."""
    X = np.asarray(X, dtype=np.float64)
    return np.column_stack([X, np.ones(X.shape[0])])


def check_full_rank(Xd, column_names=None):
    """Raise SingularDesignError naming a dependent column if rank deficient."""
    q, r, piv = scipy.linalg.qr(Xd, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(Xd.shape) * np.finfo(np.float64).eps if diag.size else 0.0
    rank = int((diag > tol).sum())
    if rank < Xd.shape[1]:
        dep = int(piv[rank])  # first column outside the independent pivot set
        name = column_names[dep] if column_names is not None else f"column {dep}"
        raise SingularDesignError(
            f"design matrix is rank deficient (dependent column: {name})",
            column=name,
        )


def fit_ols(X, y, column_names=None):
    """Least squares via orthogonal decomposition.

    Returns dict with coef (slopes then intercept), residuals, r2, se.
    """
    Xd = add_intercept(X)
    y = np.asarray(y, dtype=np.float64)
    check_full_rank(Xd, column_names)
    coef, _, _, _ = np.linalg.lstsq(Xd, y, rcond=None)
    fitted = Xd @ coef
    resid = y - fitted
    tss = np.sum((y - y.mean()) ** 2)
    rss = float(resid @ resid)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    dof = Xd.shape[0] - Xd.shape[1]
    sigma2 = rss / dof if dof > 0 else np.nan
    xtx_inv = np.linalg.inv(Xd.T @ Xd)
    se = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))
    return {"coef": coef, "residuals": resid, "r2": r2, "se": se}


def predict_linear(coef, X):
    return add_intercept(X) @ coef


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def fit_logit(X, y, max_iter=100, tol=1e-8, column_names=None):
    """Logistic regression by iteratively reweighted least squares.

    Converged when the score sup-norm |X'(y - p)| drops below tol. On
    non-convergence (e.g. perfect separation) the final iterate is returned
    with converged=False and a FitConvergenceWarning.
    """
    Xd = add_intercept(X)
    y = np.asarray(y, dtype=np.float64)
    if y.sum() == 0 or y.sum() == y.size:
        raise DegenerateTargetError("categorical target has a single class")
    check_full_rank(Xd, column_names)

    coef = np.zeros(Xd.shape[1])
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = _sigmoid(Xd @ coef)
        score = Xd.T @ (y - p)
        if np.max(np.abs(score)) < tol:
            converged = True
            break
        w = np.maximum(p * (1.0 - p), 1e-10)
        xtwx = (Xd * w[:, None]).T @ Xd
        try:
            delta = scipy.linalg.solve(xtwx, score, assume_a="pos")
        except scipy.linalg.LinAlgError:
            break
        coef = coef + delta
    if not converged:
        warnings.warn(
            f"logit did not converge in {it} iterations "
            "(possible perfect separation); returning final iterate",
            FitConvergenceWarning,
        )
    p = _sigmoid(Xd @ coef)
    ll = float(np.sum(y * np.log(np.clip(p, 1e-300, 1)) +
                      (1 - y) * np.log(np.clip(1 - p, 1e-300, 1))))
    pbar = y.mean()
    ll0 = float(y.size * (pbar * np.log(pbar) + (1 - pbar) * np.log(1 - pbar)))
    pseudo_r2 = 1.0 - ll / ll0 if ll0 != 0 else np.nan
    return {"coef": coef, "converged": converged, "iterations": it,
            "pseudo_r2": pseudo_r2}


def predict_logit(coef, X):
    return _sigmoid(add_intercept(X) @ coef)
