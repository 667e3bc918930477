"""Regression tree growing and evaluation (compiled with numba).

Trees are stored as flat node arrays in the usual layout: ``left``/``right``
child ids (-1 at leaves), split ``feature`` (-2 at leaves) and ``threshold``,
plus the training ``value`` (mean target) and ``count`` of every node.
A sample goes left iff ``x[feature] <= threshold``.

All randomness is drawn by the caller and handed in as arrays, so a tree is a
pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

BEST = 0
RANDOM = 1
LEAF = -1
NO_FEATURE = -2


@dataclass(frozen=True)
class Tree:
    left: np.ndarray
    right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    @property
    def depth(self) -> int:
        return int(_depth(self.left, self.right))

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _predict(self.left, self.right, self.feature, self.threshold, self.value, X)

    def used_features(self) -> set[int]:
        return set(self.feature[self.feature >= 0].tolist())


@numba.njit(cache=True, nogil=True)
def _depth(left, right):
    best = 0
    stack = [(0, 0)]
    while stack:
        node, d = stack.pop()
        if left[node] == LEAF:
            if d > best:
                best = d
        else:
            stack.append((left[node], d + 1))
            stack.append((right[node], d + 1))
    return best


@numba.njit(cache=True, nogil=True)
def _predict(left, right, feature, threshold, value, X):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while left[node] != LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@numba.njit(cache=True, nogil=True)
def _candidates(X, samples, start, end, order, k):
    """First ``k`` non-constant features in ``order``, sorted by index."""
    picked = np.empty(k, dtype=np.int64)
    n = 0
    for j in range(order.shape[0]):
        f = order[j]
        first = X[samples[start], f]
        for i in range(start + 1, end):
            if X[samples[i], f] != first:
                picked[n] = f
                n += 1
                break
        if n == k:
            break
    return np.sort(picked[:n])


@numba.njit(cache=True, nogil=True)
def _grow(X, y, samples, mode, max_features, min_samples_split, min_samples_leaf,
          max_depth, feature_keys, threshold_draws):
    n = samples.shape[0]
    p = X.shape[1]
    cap = 2 * n + 1
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    feature = np.full(cap, NO_FEATURE, dtype=np.int64)
    threshold = np.full(cap, np.nan)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)
    samples = samples.copy()
    buf = np.empty(n, dtype=np.int64)
    all_features = np.arange(p)

    n_nodes = 1
    draw = 0
    stack = [(0, 0, n, 0)]
    while stack:
        node, start, end, depth = stack.pop()
        m = end - start
        total = 0.0
        for i in range(start, end):
            total += y[samples[i]]
        mean = total / m
        value[node] = mean
        count[node] = m

        if m < min_samples_split or m < 2 * min_samples_leaf:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        y0 = y[samples[start]]
        constant = True
        for i in range(start + 1, end):
            if y[samples[i]] != y0:
                constant = False
                break
        if constant:
            continue

        if max_features < p:
            order = np.argsort(feature_keys[draw])
        else:
            order = all_features
        cands = _candidates(X, samples, start, end, order, max_features)
        if cands.shape[0] == 0:
            continue

        # maximise sl^2/nl + sr^2/nr over centred targets (= variance reduction)
        best_score = -np.inf
        best_f = -1
        best_t = 0.0
        for f in cands:
            if mode == RANDOM:
                lo = np.inf
                hi = -np.inf
                for i in range(start, end):
                    v = X[samples[i], f]
                    if v < lo:
                        lo = v
                    if v > hi:
                        hi = v
                t = lo + threshold_draws[draw, f] * (hi - lo)
                if t >= hi:
                    t = lo
                sl = 0.0
                nl = 0
                for i in range(start, end):
                    if X[samples[i], f] <= t:
                        sl += y[samples[i]] - mean
                        nl += 1
                nr = m - nl
                if nl < min_samples_leaf or nr < min_samples_leaf:
                    continue
                sr = 0.0
                for i in range(start, end):
                    if X[samples[i], f] > t:
                        sr += y[samples[i]] - mean
                score = sl * sl / nl + sr * sr / nr
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_t = t
            else:
                vals = np.empty(m)
                for i in range(m):
                    vals[i] = X[samples[start + i], f]
                idx = np.argsort(vals, kind="mergesort")
                ysum = 0.0
                for i in range(m):
                    ysum += y[samples[start + idx[i]]] - mean
                sl = 0.0
                for i in range(m - 1):
                    sl += y[samples[start + idx[i]]] - mean
                    nl = i + 1
                    nr = m - nl
                    a = vals[idx[i]]
                    b = vals[idx[i + 1]]
                    if a == b or nl < min_samples_leaf or nr < min_samples_leaf:
                        continue
                    sr = ysum - sl
                    score = sl * sl / nl + sr * sr / nr
                    if score > best_score:
                        best_score = score
                        best_f = f
                        t = a + (b - a) / 2.0
                        if t >= b:
                            t = a
                        best_t = t
        draw += 1
        if best_f < 0:
            continue

        # stable partition of samples[start:end]
        nl = 0
        for i in range(start, end):
            if X[samples[i], best_f] <= best_t:
                buf[nl] = samples[i]
                nl += 1
        nr = 0
        for i in range(start, end):
            if X[samples[i], best_f] > best_t:
                buf[nl + nr] = samples[i]
                nr += 1
        for i in range(m):
            samples[start + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        stack.append((right[node], start + nl, end, depth + 1))
        stack.append((left[node], start, start + nl, depth + 1))

    return (left[:n_nodes], right[:n_nodes], feature[:n_nodes], threshold[:n_nodes],
            value[:n_nodes], count[:n_nodes])


def grow_tree(X: np.ndarray, y: np.ndarray, samples: np.ndarray, *, random_splits: bool,
              max_features: int, rng: np.random.Generator, min_samples_split: int = 2,
              min_samples_leaf: int = 1, max_depth: int | None = None) -> Tree:
    """Grow one tree on ``X[samples]`` (``samples`` may repeat rows).

    ``random_splits`` draws one uniform threshold per candidate feature
    instead of scanning every cut point.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    samples = np.ascontiguousarray(samples, dtype=np.int64)
    n, p = len(samples), X.shape[1]
    if n == 0:
        raise ValueError("cannot grow a tree on zero samples")
    if not 1 <= max_features <= p:
        raise ValueError(f"max_features must lie in [1, {p}], got {max_features}")
    # at most n - 1 internal nodes consume a draw each
    rows = max(n - 1, 1)
    keys = rng.random((rows, p)) if max_features < p else np.zeros((1, p))
    thresholds = rng.random((rows, p)) if random_splits else np.zeros((1, p))
    arrays = _grow(X, y, samples, RANDOM if random_splits else BEST, max_features,
                   min_samples_split, min_samples_leaf,
                   -1 if max_depth is None else max_depth, keys, thresholds)
    return Tree(*arrays)
