# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CART tree growing; hot-loop twin of py_tree.build_tree.

Keep the algorithm, RNG consumption and accumulation order in lockstep with
the pure-python module: any change here must be mirrored there.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def build_tree(cnp.float64_t[:, ::1] X, cnp.float64_t[::1] y,
               cnp.int64_t[:, ::1] orders, int mtry, int max_depth,
               int min_leaf, bint classification, object rng):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t cap = 2 * n + 1

    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.full(cap, np.nan, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    value_arr = np.zeros(cap, dtype=np.float64)
    nnode_arr = np.zeros(cap, dtype=np.int32)
    cdef cnp.int32_t[::1] feature = feature_arr
    cdef cnp.float64_t[::1] threshold = threshold_arr
    cdef cnp.int32_t[::1] left = left_arr
    cdef cnp.int32_t[::1] right = right_arr
    cdef cnp.float64_t[::1] value = value_arr
    cdef cnp.int32_t[::1] n_node = nnode_arr

    # stack rows: start, end, depth, parent, is_left
    stack_arr = np.zeros((cap + 1, 5), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] stack = stack_arr
    cdef Py_ssize_t top = 0
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    top = 1

    goes_left_arr = np.zeros(n, dtype=np.uint8)
    buf_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] goes_left = goes_left_arr
    cdef cnp.int64_t[::1] buf = buf_arr

    cdef cnp.int64_t[::1] cand
    cdef Py_ssize_t n_nodes = 0
    cdef Py_ssize_t start, end, depth, parent, is_left, node, m
    cdef Py_ssize_t i, j, k, f, ci, best_f, best_i, nl_count, nr_count
    cdef double total, ymin, ymax, yv, cs, ls, rs, zl, zr, nl, nr
    cdef double score, best_score, feat_total, a, b, thr, prev_x, cur_x

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        parent = stack[top, 3]
        is_left = stack[top, 4]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left:
                left[parent] = <cnp.int32_t> node
            else:
                right[parent] = <cnp.int32_t> node
        m = end - start

        total = 0.0
        ymin = y[orders[0, start]]
        ymax = ymin
        for i in range(start, end):
            yv = y[orders[0, i]]
            total += yv
            if yv < ymin:
                ymin = yv
            if yv > ymax:
                ymax = yv
        value[node] = total / m
        n_node[node] = <cnp.int32_t> m

        if m < 2 or m < 2 * min_leaf:
            continue
        if 0 < max_depth <= depth:
            continue
        if classification:
            if total == 0.0 or total == m:
                continue
        elif ymin == ymax:
            continue

        cand = rng.permutation(p)[:mtry]
        best_f = -1
        best_i = -1
        best_score = -np.inf
        for ci in range(cand.shape[0]):
            f = cand[ci]
            feat_total = 0.0
            for i in range(start, end):
                feat_total += y[orders[f, i]]
            cs = 0.0
            prev_x = X[orders[f, start], f]
            for j in range(1, m):
                cs += y[orders[f, start + j - 1]]
                cur_x = X[orders[f, start + j], f]
                if cur_x != prev_x and j >= min_leaf and j <= m - min_leaf:
                    nl = <double> j
                    nr = <double> (m - j)
                    ls = cs
                    rs = feat_total - ls
                    if classification:
                        zl = nl - ls
                        zr = nr - rs
                        score = (ls * ls + zl * zl) / nl + (rs * rs + zr * zr) / nr
                    else:
                        score = ls * ls / nl + rs * rs / nr
                    if score > best_score:
                        best_score = score
                        best_f = f
                        best_i = j
                prev_x = cur_x

        if best_f < 0:
            continue

        a = X[orders[best_f, start + best_i - 1], best_f]
        b = X[orders[best_f, start + best_i], best_f]
        thr = 0.5 * (a + b)
        if thr >= b:
            thr = a
        feature[node] = <cnp.int32_t> best_f
        threshold[node] = thr

        for i in range(start, start + best_i):
            goes_left[orders[best_f, i]] = 1
        for f in range(p):
            nl_count = 0
            nr_count = best_i
            for i in range(start, end):
                k = orders[f, i]
                if goes_left[k]:
                    buf[nl_count] = k
                    nl_count += 1
                else:
                    buf[nr_count] = k
                    nr_count += 1
            for i in range(m):
                orders[f, start + i] = buf[i]
        for i in range(start, start + best_i):
            goes_left[orders[best_f, i]] = 0

        stack[top, 0] = start + best_i
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 0
        top += 1
        stack[top, 0] = start
        stack[top, 1] = start + best_i
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 1
        top += 1

    return {
        "feature": feature_arr[:n_nodes].copy(),
        "threshold": threshold_arr[:n_nodes].copy(),
        "left": left_arr[:n_nodes].copy(),
        "right": right_arr[:n_nodes].copy(),
        "value": value_arr[:n_nodes].copy(),
        "n_node": nnode_arr[:n_nodes].copy(),
    }
