"""Pure-numpy CART tree growing; reference fallback for the compiled kernel.

Both backends implement the same algorithm on presorted feature orders with
stable partitions, draw candidate features from the RNG in the same sequence,
and accumulate prefix sums left-to-right, so the grown trees agree across
backends (bitwise for 0/1 targets, to float accumulation order otherwise).
"""

import numpy as np


def build_tree(X, y, orders, mtry, max_depth, min_leaf, classification, rng):
    """Grow one CART tree and return it in array form.

    X:      (n, p) float64 training rows (already bootstrapped by the caller).
    y:      (n,) float64 target; {0,1} when classification.
    orders: (p, n) int64 row indices, column-presorted by stable argsort.
            Mutated in place (used as the partition workspace).
    mtry:   candidate features per split; max_depth 0 means unlimited.
    rng:    numpy Generator; one rng.permutation(p) per split attempt.

    Returns dict with feature/threshold/left/right/value/n_node arrays;
    feature == -1 marks a leaf. value is the node mean of y (class-1 share
    for classification).
    """
    n, p = X.shape
    feature, threshold = [], []
    left, right, value, n_node = [], [], [], []
    goes_left = np.zeros(n, dtype=bool)

    stack = [(0, n, 0, -1, False)]
    while stack:
        start, end, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node
        m = end - start
        rows0 = orders[0, start:end]
        ynode = y[rows0]
        total = np.cumsum(ynode)[-1]  # sequential accumulation, matches C loop
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(total / m)
        n_node.append(m)

        if m < 2 or m < 2 * min_leaf:
            continue
        if 0 < max_depth <= depth:
            continue
        if classification:
            if total == 0.0 or total == m:
                continue
        elif ynode.max() == ynode.min():
            continue

        cand = rng.permutation(p)[:mtry]
        best_f, best_i, best_score = -1, -1, -np.inf
        for f in cand:
            seg = orders[f, start:end]
            xo = X[seg, f]
            valid = xo[1:] != xo[:-1]
            if min_leaf > 1:
                valid = valid.copy()
                valid[: min_leaf - 1] = False
                valid[m - min_leaf:] = False
            if not valid.any():
                continue
            cs = np.cumsum(y[seg])
            nl = np.arange(1, m, dtype=np.float64)
            nr = m - nl
            ls = cs[:-1]
            rs = cs[-1] - ls
            if classification:
                zl = nl - ls
                zr = nr - rs
                score = (ls * ls + zl * zl) / nl + (rs * rs + zr * zr) / nr
            else:
                score = ls * ls / nl + rs * rs / nr
            score = np.where(valid, score, -np.inf)
            j = int(np.argmax(score))
            if score[j] > best_score:
                best_score = float(score[j])
                best_f = int(f)
                best_i = j + 1

        if best_f < 0:
            continue

        seg = orders[best_f, start:end]
        a = X[seg[best_i - 1], best_f]
        b = X[seg[best_i], best_f]
        thr = 0.5 * (a + b)
        if thr >= b:  # midpoint rounded up to the right value
            thr = a
        feature[node] = best_f
        threshold[node] = thr

        left_rows = seg[:best_i].copy()
        goes_left[left_rows] = True
        for f in range(p):
            s2 = orders[f, start:end]
            mask = goes_left[s2]
            orders[f, start:end] = np.concatenate([s2[mask], s2[~mask]])
        goes_left[left_rows] = False

        stack.append((start + best_i, end, depth + 1, node, False))
        stack.append((start, start + best_i, depth + 1, node, True))

    return {
        "feature": np.array(feature, dtype=np.int32),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int32),
        "right": np.array(right, dtype=np.int32),
        "value": np.array(value, dtype=np.float64),
        "n_node": np.array(n_node, dtype=np.int32),
    }
