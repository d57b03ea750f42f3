"""Compiled inner loops for tree growing and tree evaluation."""

import numpy as np
from numba import njit


@njit(cache=True)
def _midpoint(a, b):
    t = a + (b - a) * 0.5
    if not a < t:
        t = b
    return t


@njit(cache=True)
def best_splits(col_ptr, col_row, col_val, row_slot, g, h,
                node_g, node_h, node_c, reg_lambda, min_leaf):
    """Exact greedy split search for every open node of one tree level.

    Columns are stored sorted by value; rows missing from a column hold an
    implicit 0.0, inserted at its place in the value order. Routing is
    ``value < threshold -> left``. Returns per-slot (gain, feature,
    threshold); the first maximum in (feature, threshold) order wins.
    """
    n_slots = node_g.shape[0]
    n_cols = col_ptr.shape[0] - 1
    best_gain = np.full(n_slots, -np.inf)
    best_feat = np.full(n_slots, -1, dtype=np.int64)
    best_thr = np.zeros(n_slots)
    parent = np.empty(n_slots)
    for s in range(n_slots):
        parent[s] = node_g[s] * node_g[s] / (node_h[s] + reg_lambda)

    cg = np.zeros(n_slots)
    ch = np.zeros(n_slots)
    cc = np.zeros(n_slots, dtype=np.int64)
    lg = np.zeros(n_slots)
    lh = np.zeros(n_slots)
    lc = np.zeros(n_slots, dtype=np.int64)
    last = np.zeros(n_slots)
    zero_done = np.zeros(n_slots, dtype=np.bool_)

    for j in range(n_cols):
        start = col_ptr[j]
        stop = col_ptr[j + 1]
        if start == stop:
            continue
        cg[:] = 0.0
        ch[:] = 0.0
        cc[:] = 0
        for e in range(start, stop):
            s = row_slot[col_row[e]]
            if s >= 0:
                r = col_row[e]
                cg[s] += g[r]
                ch[s] += h[r]
                cc[s] += 1
        lg[:] = 0.0
        lh[:] = 0.0
        lc[:] = 0
        zero_done[:] = False
        for e in range(start, stop):
            r = col_row[e]
            s = row_slot[r]
            if s < 0:
                continue
            v = col_val[e]
            if v > 0.0 and not zero_done[s]:
                zc = node_c[s] - cc[s]
                if zc > 0:
                    if lc[s] > 0:
                        _consider(s, lg[s], lh[s], lc[s], _midpoint(last[s], 0.0), j,
                                  node_g, node_h, node_c, parent, reg_lambda, min_leaf,
                                  best_gain, best_feat, best_thr)
                    lg[s] += node_g[s] - cg[s]
                    lh[s] += node_h[s] - ch[s]
                    lc[s] += zc
                    last[s] = 0.0
                zero_done[s] = True
            if lc[s] > 0 and v != last[s]:
                _consider(s, lg[s], lh[s], lc[s], _midpoint(last[s], v), j,
                          node_g, node_h, node_c, parent, reg_lambda, min_leaf,
                          best_gain, best_feat, best_thr)
            lg[s] += g[r]
            lh[s] += h[r]
            lc[s] += 1
            last[s] = v
        # columns whose values in a node are all negative still split against the zeros
        for s in range(n_slots):
            if not zero_done[s] and lc[s] > 0 and node_c[s] - cc[s] > 0:
                _consider(s, lg[s], lh[s], lc[s], _midpoint(last[s], 0.0), j,
                          node_g, node_h, node_c, parent, reg_lambda, min_leaf,
                          best_gain, best_feat, best_thr)
    return best_gain, best_feat, best_thr


@njit(cache=True)
def _consider(s, gl, hl, cl, thr, j, node_g, node_h, node_c, parent, reg_lambda, min_leaf,
              best_gain, best_feat, best_thr):
    cr = node_c[s] - cl
    if cl < min_leaf or cr < min_leaf:
        return
    gr = node_g[s] - gl
    hr = node_h[s] - hl
    gain = 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent[s])
    if gain > best_gain[s]:
        best_gain[s] = gain
        best_feat[s] = j
        best_thr[s] = thr


@njit(cache=True)
def csr_value(indptr, indices, data, row, col):
    lo = indptr[row]
    hi = indptr[row + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        c = indices[mid]
        if c < col:
            lo = mid + 1
        elif c > col:
            hi = mid
        else:
            return data[mid]
    return 0.0


@njit(cache=True)
def route_rows(indptr, indices, data, row_node, node_feat, node_thr, node_left, node_right):
    """Move rows whose node was split to the matching child node."""
    n = row_node.shape[0]
    for r in range(n):
        nd = row_node[r]
        if nd < 0:
            continue
        f = node_feat[nd]
        if f < 0:
            continue
        v = csr_value(indptr, indices, data, r, f)
        if v < node_thr[nd]:
            row_node[r] = node_left[nd]
        else:
            row_node[r] = node_right[nd]


@njit(cache=True)
def tree_predict_csr(indptr, indices, data, feat, thr, left, right, value):
    n = indptr.shape[0] - 1
    out = np.empty(n)
    for r in range(n):
        nd = 0
        while feat[nd] >= 0:
            if csr_value(indptr, indices, data, r, feat[nd]) < thr[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        out[r] = value[nd]
    return out


@njit(cache=True)
def ensemble_raw_dense(X, feat, thr, left, value, roots, n_classes):
    """Sum of leaf values per class; trees are laid out round-major.

    Requires every right child to sit at ``left + 1`` so routing is branchless.
    """
    m = X.shape[0]
    out = np.zeros((m, n_classes))
    for i in range(m):
        for t in range(roots.shape[0]):
            nd = roots[t]
            while feat[nd] >= 0:
                nd = left[nd] + (X[i, feat[nd]] >= thr[nd])
            out[i, t % n_classes] += value[nd]
    return out


@njit(cache=True)
def ensemble_raw_csr(indptr, indices, data, feat, thr, left, right, value, roots, n_classes):
    m = indptr.shape[0] - 1
    out = np.zeros((m, n_classes))
    for i in range(m):
        for t in range(roots.shape[0]):
            nd = roots[t]
            while feat[nd] >= 0:
                if csr_value(indptr, indices, data, i, feat[nd]) < thr[nd]:
                    nd = left[nd]
                else:
                    nd = right[nd]
            out[i, t % n_classes] += value[nd]
    return out
