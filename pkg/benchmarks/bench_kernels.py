"""Compare the compiled tree kernel against the pure-python fallback.

Usage: python benchmarks/bench_kernels.py [--n 7062] [--trees 10]

Grows identical forests through both backends on the same synthetic data
and reports per-tree fit time plus the speedup. Also times a full
run_scenario call per backend to show the end-to-end effect.
"""

import argparse
import time

import numpy as np

from povbench import _kernels
from povbench._kernels import py_tree
from povbench.dataset import GeneratorConfig, label_poor, poverty_line, synthesize


def _presort(X):
    n, p = X.shape
    orders = np.empty((p, n), dtype=np.int64)
    for f in range(p):
        orders[f] = np.argsort(X[:, f], kind="stable")
    return orders


def bench_backend(build_tree, X, y, trees, mtry, max_depth, min_leaf,
                  classification, seed):
    start = time.perf_counter()
    for child in np.random.SeedSequence(seed).spawn(trees):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, X.shape[0], size=X.shape[0])
        Xb = np.ascontiguousarray(X[boot])
        yb = y[boot]
        build_tree(Xb, yb, _presort(Xb), mtry, max_depth, min_leaf,
                   classification, rng)
    return (time.perf_counter() - start) / trees


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=7062)
    ap.add_argument("--trees", type=int, default=10)
    args = ap.parse_args()

    try:
        from povbench._kernels import _ctree
    except ImportError:
        print("compiled kernel not available; build the extension first")
        return

    ds = synthesize(GeneratorConfig(n=args.n, seed=1))
    X = np.ascontiguousarray(ds.design_matrix())
    y_reg = ds.log_income
    z = poverty_line(ds, 0.5)
    y_cls = label_poor(ds, z).astype(np.float64)

    print(f"active backend: {_kernels.BACKEND}; n={args.n}, "
          f"{args.trees} trees per case\n")
    print(f"{'case':<34}{'cython':>12}{'python':>12}{'speedup':>10}")
    cases = [
        ("regression, unlimited depth", y_reg, False, 0, 1),
        ("regression, depth 8 / leaf 5", y_reg, False, 8, 5),
        ("classification, unlimited depth", y_cls, True, 0, 1),
        ("classification, depth 8 / leaf 5", y_cls, True, 8, 5),
    ]
    for label, y, cls, depth, leaf in cases:
        tc = bench_backend(_ctree.build_tree, X, y, args.trees, 3, depth,
                           leaf, cls, seed=7)
        tp = bench_backend(py_tree.build_tree, X, y, args.trees, 3, depth,
                           leaf, cls, seed=7)
        print(f"{label:<34}{tc * 1e3:>10.1f}ms{tp * 1e3:>10.1f}ms"
              f"{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
