"""Variance-reduction regression trees (CART), compiled with numba.

A tree is stored as flat arrays: ``feature`` (-1 for leaves), ``threshold``,
``left``, ``right`` and ``value``. Samples with ``x[feature] <= threshold`` go
left. Splits scan sorted unique values of each candidate feature; ties go to
the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

LEAF = -1


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _predict(self.feature, self.threshold, self.left, self.right, self.value,
                        np.ascontiguousarray(X, dtype=np.float64))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        return _apply(self.feature, self.threshold, self.left, self.right,
                      np.ascontiguousarray(X, dtype=np.float64))


@numba.njit(cache=True)
def _apply(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@numba.njit(cache=True)
def _predict(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@numba.njit(cache=True)
def _best_split(X, y, idx, features, min_leaf):
    """Return (feature, threshold, gain) of the best split of ``idx``; feature -1 if none."""
    m = idx.size
    total = 0.0
    for k in range(m):
        total += y[idx[k]]
    parent = total * total / m
    best_f = -1
    best_thr = 0.0
    best_score = parent
    vals = np.empty(m)
    ys = np.empty(m)
    for fi in range(features.size):
        f = features[fi]
        for k in range(m):
            vals[k] = X[idx[k], f]
        order = np.argsort(vals, kind="mergesort")
        for k in range(m):
            ys[k] = y[idx[order[k]]]
        left_sum = 0.0
        for k in range(m - 1):
            left_sum += ys[k]
            n_left = k + 1
            if n_left < min_leaf:
                continue
            if m - n_left < min_leaf:
                break
            lo = vals[order[k]]
            hi = vals[order[k + 1]]
            if not lo < hi:
                continue
            right_sum = total - left_sum
            score = left_sum * left_sum / n_left + right_sum * right_sum / (m - n_left)
            if score > best_score:
                best_score = score
                best_f = f
                thr = 0.5 * (lo + hi)
                if not thr < hi:
                    thr = lo
                best_thr = thr
    gain = best_score - parent
    # guard against rounding noise producing spurious splits
    if best_f >= 0 and gain <= 1e-12 * max(1.0, abs(parent)):
        best_f = -1
    return best_f, best_thr, gain


@numba.njit(cache=True)
def _build(X, y, sample_idx, max_depth, min_leaf, mtry, seed):
    """Grow a tree on rows ``sample_idx`` (repeats allowed, e.g. a bootstrap).

    Returns the node arrays plus the leaf reached by each entry of ``sample_idx``.
    """
    np.random.seed(seed)
    n, d = X.shape
    cap = 2 * sample_idx.size + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    depth = np.zeros(cap, dtype=np.int64)
    node_of = np.empty(sample_idx.size, dtype=np.int64)

    # each stack entry is a node id; its members live in `members[start:stop]`
    members = sample_idx.copy()
    positions = np.arange(sample_idx.size)
    start = np.zeros(cap, dtype=np.int64)
    stop = np.zeros(cap, dtype=np.int64)
    stop[0] = sample_idx.size
    n_nodes = 1
    stack = [0]
    all_features = np.arange(d)
    while len(stack) > 0:
        node = stack.pop()
        s, e = start[node], stop[node]
        idx = members[s:e]
        m = e - s
        mean = 0.0
        for k in range(m):
            mean += y[idx[k]]
        mean /= m
        value[node] = mean

        splittable = m >= 2 * min_leaf and (max_depth < 0 or depth[node] < max_depth)
        if splittable:
            pure = True
            for k in range(1, m):
                if y[idx[k]] != y[idx[0]]:
                    pure = False
                    break
            splittable = not pure
        f = -1
        thr = 0.0
        if splittable:
            if mtry >= d:
                feats = all_features
            else:
                feats = np.sort(np.random.permutation(d)[:mtry])
            f, thr, _ = _best_split(X, y, idx, feats, min_leaf)
        if f < 0:
            for k in range(s, e):
                node_of[positions[k]] = node
            continue

        # stable partition of members[s:e] into left / right
        seg = members[s:e].copy()
        pseg = positions[s:e].copy()
        w = s
        for k in range(m):
            if X[seg[k], f] <= thr:
                members[w] = seg[k]
                positions[w] = pseg[k]
                w += 1
        mid = w
        for k in range(m):
            if not X[seg[k], f] <= thr:
                members[w] = seg[k]
                positions[w] = pseg[k]
                w += 1

        lc, rc = n_nodes, n_nodes + 1
        n_nodes += 2
        feature[node] = f
        threshold[node] = thr
        left[node] = lc
        right[node] = rc
        start[lc], stop[lc] = s, mid
        start[rc], stop[rc] = mid, e
        depth[lc] = depth[node] + 1
        depth[rc] = depth[node] + 1
        stack.append(rc)
        stack.append(lc)

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], node_of)


def grow_tree(X: np.ndarray, y: np.ndarray, sample_idx: np.ndarray | None = None,
              max_depth: int = -1, min_leaf: int = 1, mtry: int | None = None,
              seed: int = 0) -> tuple[Tree, np.ndarray]:
    """Fit a regression tree; returns the tree and the leaf of each sampled row.

    ``max_depth < 0`` means unlimited; ``mtry`` features are drawn per split
    (all when ``None``).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if sample_idx is None:
        sample_idx = np.arange(X.shape[0], dtype=np.int64)
    d = X.shape[1]
    mtry = d if mtry is None else max(1, min(int(mtry), d))
    f, t, lft, rgt, v, node_of = _build(X, y, np.asarray(sample_idx, dtype=np.int64),
                                        int(max_depth), int(min_leaf), mtry, int(seed) % (2**32))
    return Tree(f, t, lft, rgt, v), node_of
