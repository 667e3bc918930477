"""Shapley attributions for fitted models.

Trees use path-conditional semantics: a feature outside the coalition is
integrated out by following both children weighted by training counts.
Non-tree models substitute background rows for the absent features.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numba
import numpy as np

from .features import FEATURE_NAMES
from .learn.forest import ForestModel
from .learn.linear import LinearModel
from .learn.trees import LEAF, Tree

MAX_EXACT_FEATURES = 15
BACKGROUND_CAP = 512
BEESWARM_HEADER = ("sample_id", "feature", "phi", "feature_value")


class TooManyFeaturesForExact(ValueError):
    pass


@dataclass(frozen=True)
class ShapExplanation:
    base_value: float
    phi: np.ndarray
    prediction: float
    stderr: np.ndarray | None = None

    @property
    def gap(self) -> float:
        """Local-accuracy residual, prediction - (base + sum phi)."""
        return self.prediction - (self.base_value + float(np.sum(self.phi)))


# value functions

def conditional_expectation(tree: Tree, x, subset) -> float:
    """Expected tree output given the features in ``subset`` are fixed to ``x``."""
    subset = set(int(j) for j in subset)

    def walk(node):
        if tree.left[node] == LEAF:
            return float(tree.value[node])
        f = int(tree.feature[node])
        left, right = tree.left[node], tree.right[node]
        if f in subset:
            return walk(left if x[f] <= tree.threshold[node] else right)
        return (tree.count[left] * walk(left) + tree.count[right] * walk(right)) / tree.count[node]

    return walk(0)


def _tree_subset_values(tree: Tree, x, p: int) -> np.ndarray:
    """Conditional expectation for all 2**p coalitions at once (bit j = feature j)."""
    masks = np.arange(1 << p)

    def walk(node):
        if tree.left[node] == LEAF:
            return np.full(len(masks), float(tree.value[node]))
        f = int(tree.feature[node])
        left, right = tree.left[node], tree.right[node]
        a, b = walk(left), walk(right)
        hot = a if x[f] <= tree.threshold[node] else b
        mixed = (tree.count[left] * a + tree.count[right] * b) / tree.count[node]
        return np.where(masks >> f & 1, hot, mixed)

    return walk(0)


def _substitution_values(model, x, background: np.ndarray, p: int) -> np.ndarray:
    out = np.empty(1 << p)
    Z = np.empty_like(background)
    for mask in range(1 << p):
        Z[:] = background
        cols = [j for j in range(p) if mask >> j & 1]
        Z[:, cols] = x[cols]
        out[mask] = model.predict(Z).mean()
    return out


def subset_values(model, x, background=None) -> np.ndarray:
    """Coalition values v(S) for every S, indexed by bitmask."""
    x = np.asarray(x, dtype=np.float64)
    p = len(x)
    if p > MAX_EXACT_FEATURES:
        raise TooManyFeaturesForExact(f"{p} features exceed the exact limit of {MAX_EXACT_FEATURES}")
    if isinstance(model, Tree):
        return _tree_subset_values(model, x, p)
    if isinstance(model, ForestModel) and background is None:
        return np.mean([_tree_subset_values(t, x, p) for t in model.trees], axis=0)
    if background is None:
        raise ValueError("non-tree models need background rows")
    return _substitution_values(model, x, np.asarray(background, dtype=np.float64), p)


def _shapley_from_values(v: np.ndarray, p: int) -> np.ndarray:
    masks = np.arange(1 << p)
    size = np.array([bin(m).count("1") for m in masks])
    weight = np.array([math.factorial(s) * math.factorial(p - s - 1) / math.factorial(p)
                       for s in range(p)])
    phi = np.empty(p)
    for i in range(p):
        without = masks[(masks >> i & 1) == 0]
        phi[i] = np.sum(weight[size[without]] * (v[without | 1 << i] - v[without]))
    return phi


def shapley_bruteforce(model, x, background=None) -> ShapExplanation:
    """Exact Shapley values by enumerating every coalition (at most 15 features)."""
    x = np.asarray(x, dtype=np.float64)
    v = subset_values(model, x, background)
    phi = _shapley_from_values(v, len(x))
    return ShapExplanation(float(v[0]), phi, float(v[-1]))


# polynomial tree algorithm

@numba.njit(cache=True, nogil=True)
def _extend(feat, zero, one, pw, base, depth, zero_fraction, one_fraction, feature):
    feat[base + depth] = feature
    zero[base + depth] = zero_fraction
    one[base + depth] = one_fraction
    pw[base + depth] = 1.0 if depth == 0 else 0.0
    for i in range(depth - 1, -1, -1):
        pw[base + i + 1] += one_fraction * pw[base + i] * (i + 1) / (depth + 1)
        pw[base + i] = zero_fraction * pw[base + i] * (depth - i) / (depth + 1)


@numba.njit(cache=True, nogil=True)
def _unwind(feat, zero, one, pw, base, depth, index):
    one_fraction = one[base + index]
    zero_fraction = zero[base + index]
    next_one = pw[base + depth]
    for i in range(depth - 1, -1, -1):
        if one_fraction != 0:
            tmp = pw[base + i]
            pw[base + i] = next_one * (depth + 1) / ((i + 1) * one_fraction)
            next_one = tmp - pw[base + i] * zero_fraction * (depth - i) / (depth + 1)
        else:
            pw[base + i] = pw[base + i] * (depth + 1) / (zero_fraction * (depth - i))
    for i in range(index, depth):
        feat[base + i] = feat[base + i + 1]
        zero[base + i] = zero[base + i + 1]
        one[base + i] = one[base + i + 1]


@numba.njit(cache=True, nogil=True)
def _unwound_sum(zero, one, pw, base, depth, index):
    one_fraction = one[base + index]
    zero_fraction = zero[base + index]
    next_one = pw[base + depth]
    total = 0.0
    for i in range(depth - 1, -1, -1):
        if one_fraction != 0:
            tmp = next_one * (depth + 1) / ((i + 1) * one_fraction)
            total += tmp
            next_one = pw[base + i] - tmp * zero_fraction * (depth - i) / (depth + 1)
        else:
            total += pw[base + i] / zero_fraction / ((depth - i) / (depth + 1))
    return total


# recursive kernels are not cached on disk: numba's cache mishandles recursion
@numba.njit(nogil=True)
def _recurse(left, right, feature, threshold, value, count, x, phi,
             feat, zero, one, pw, parent_base, node, depth,
             zero_fraction, one_fraction, split_feature):
    # each level works on its own copy of the path, stacked after the parent's
    base = parent_base + depth
    if depth > 0:
        for i in range(depth):
            feat[base + i] = feat[parent_base + i]
            zero[base + i] = zero[parent_base + i]
            one[base + i] = one[parent_base + i]
            pw[base + i] = pw[parent_base + i]
    _extend(feat, zero, one, pw, base, depth, zero_fraction, one_fraction, split_feature)

    if left[node] == LEAF:
        for i in range(1, depth + 1):
            w = _unwound_sum(zero, one, pw, base, depth, i)
            phi[feat[base + i]] += w * (one[base + i] - zero[base + i]) * value[node]
        return

    f = feature[node]
    if x[f] <= threshold[node]:
        hot, cold = left[node], right[node]
    else:
        hot, cold = right[node], left[node]
    hot_zero = count[hot] / count[node]
    cold_zero = count[cold] / count[node]
    incoming_zero = 1.0
    incoming_one = 1.0
    index = 0
    while index <= depth:
        if feat[base + index] == f:
            break
        index += 1
    if index != depth + 1:
        incoming_zero = zero[base + index]
        incoming_one = one[base + index]
        _unwind(feat, zero, one, pw, base, depth, index)
        depth -= 1
    _recurse(left, right, feature, threshold, value, count, x, phi, feat, zero, one, pw,
             base, hot, depth + 1, hot_zero * incoming_zero, incoming_one, f)
    _recurse(left, right, feature, threshold, value, count, x, phi, feat, zero, one, pw,
             base, cold, depth + 1, cold_zero * incoming_zero, 0.0, f)


@numba.njit(nogil=True)
def _tree_shap_rows(left, right, feature, threshold, value, count, max_depth, X, out):
    size = (max_depth + 2) * (max_depth + 3) // 2 + max_depth + 2
    feat = np.empty(size, dtype=np.int64)
    zero = np.empty(size)
    one = np.empty(size)
    pw = np.empty(size)
    phi = np.empty(X.shape[1])
    for r in range(X.shape[0]):
        phi[:] = 0.0
        _recurse(left, right, feature, threshold, value, count, X[r], phi,
                 feat, zero, one, pw, 0, 0, 0, 1.0, 1.0, -1)
        out[r] += phi


def tree_shap_matrix(model: ForestModel | Tree, X) -> tuple[np.ndarray, float]:
    """Path-conditional Shapley values for every row of ``X``: (phi, base_value).

    Per-tree attributions are averaged in tree order, like the predictions.
    """
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    trees = [model] if isinstance(model, Tree) else model.trees
    out = np.zeros(X.shape)
    for t in trees:
        _tree_shap_rows(t.left, t.right, t.feature, t.threshold, t.value,
                        t.count.astype(np.float64), t.depth, X, out)
    out /= len(trees)
    base = float(np.mean([t.value[0] for t in trees]))
    return out, base


def tree_shap(model: ForestModel | Tree, x) -> ShapExplanation:
    x = np.asarray(x, dtype=np.float64)
    phi, base = tree_shap_matrix(model, x[None, :])
    return ShapExplanation(base, phi[0], float(model.predict(x[None, :])[0]))


# sampling

def shapley_sampling(model, x, background=None, n_permutations: int = 200,
                     seed: int = 0) -> ShapExplanation:
    """Permutation-sampling estimate with per-feature standard errors.

    Coalition values are cached, so small feature counts cost at most 2**p
    model evaluations regardless of ``n_permutations``.
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    p = len(x)
    trees = None
    if background is None:
        if isinstance(model, Tree):
            trees = [model]
        elif isinstance(model, ForestModel):
            trees = model.trees
        else:
            raise ValueError("non-tree models need background rows")
    else:
        background = np.asarray(background, dtype=np.float64)
        if len(background) == 0:
            raise ValueError("background is empty")
    cache: dict[frozenset, float] = {}

    def v(subset: frozenset) -> float:
        if subset not in cache:
            if trees is not None:
                cache[subset] = float(np.mean([conditional_expectation(t, x, subset) for t in trees]))
            else:
                Z = background.copy()
                cols = sorted(subset)
                Z[:, cols] = x[cols]
                cache[subset] = float(model.predict(Z).mean())
        return cache[subset]

    rng = np.random.default_rng(seed)
    contrib = np.empty((n_permutations, p))
    for k in range(n_permutations):
        members: frozenset = frozenset()
        prev = v(members)
        for j in rng.permutation(p):
            members = members | {int(j)}
            cur = v(members)
            contrib[k, j] = cur - prev
            prev = cur
    phi = contrib.mean(axis=0)
    se = contrib.std(axis=0, ddof=1) / math.sqrt(n_permutations) if n_permutations > 1 \
        else np.full(p, np.inf)
    return ShapExplanation(v(frozenset()), phi, v(frozenset(range(p))), se)


# model-level entry point

def default_background(X, cap: int = BACKGROUND_CAP, seed: int = 0) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if len(X) <= cap:
        return X
    rows = np.sort(np.random.default_rng(seed).choice(len(X), size=cap, replace=False))
    return X[rows]


def linear_shap_matrix(model: LinearModel, X, background) -> tuple[np.ndarray, float]:
    """Closed form for a linear model under background substitution."""
    mu = np.asarray(background, dtype=np.float64).mean(axis=0)
    phi = (np.asarray(X, dtype=np.float64) - mu) * model.weights
    return phi, float(mu @ model.weights + model.intercept)


def explain_matrix(model, X, background=None, n_permutations: int = 200,
                   seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Attributions for every row: (phi, base_values, predictions).

    Forests and trees use the polynomial tree algorithm, linear models a
    closed form, anything else permutation sampling against ``background``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    preds = model.predict(X)
    if isinstance(model, (ForestModel, Tree)):
        phi, base = tree_shap_matrix(model, X)
        return phi, np.full(len(X), base), preds
    if background is None:
        raise ValueError("non-tree models need background rows")
    if isinstance(model, LinearModel):
        phi, base = linear_shap_matrix(model, X, background)
        return phi, np.full(len(X), base), preds
    rows = [shapley_sampling(model, x, background, n_permutations, seed) for x in X]
    return (np.array([r.phi for r in rows]), np.array([r.base_value for r in rows]),
            np.array([r.prediction for r in rows]))


# aggregation and files

@dataclass(frozen=True)
class GlobalImportance:
    feature_names: tuple[str, ...]
    mean_abs_phi: np.ndarray
    ranking: np.ndarray  # feature indices, most important first
    phi: np.ndarray  # (samples, features), signed
    values: np.ndarray  # matching feature values

    def ranked(self) -> list[tuple[str, float]]:
        return [(self.feature_names[j], float(self.mean_abs_phi[j])) for j in self.ranking]

    def rank_of(self, name: str) -> int:
        """1-based rank of a feature."""
        j = self.feature_names.index(name)
        return int(np.flatnonzero(self.ranking == j)[0]) + 1


def _names(p: int, names=None) -> tuple[str, ...]:
    if names is not None:
        if len(names) != p:
            raise ValueError(f"{len(names)} names for {p} features")
        return tuple(names)
    return FEATURE_NAMES if p == len(FEATURE_NAMES) else tuple(f"x{j}" for j in range(p))


def aggregate(phi, values=None, feature_names=None) -> GlobalImportance:
    """Mean |phi| per feature, ranked descending with ties to the lower index."""
    if isinstance(phi, (list, tuple)) and phi and isinstance(phi[0], ShapExplanation):
        widths = {len(e.phi) for e in phi}
        if len(widths) != 1:
            raise ValueError(f"explanations have inconsistent widths {sorted(widths)}")
        phi = np.array([e.phi for e in phi])
    phi = np.atleast_2d(np.asarray(phi, dtype=np.float64))
    if phi.shape[0] == 0:
        raise ValueError("need at least one explanation")
    values = np.full(phi.shape, np.nan) if values is None else np.atleast_2d(np.asarray(values, dtype=np.float64))
    if values.shape != phi.shape:
        raise ValueError(f"values shape {values.shape} does not match phi {phi.shape}")
    mean_abs = np.abs(phi).mean(axis=0)
    ranking = np.lexsort((np.arange(len(mean_abs)), -mean_abs))
    return GlobalImportance(_names(phi.shape[1], feature_names), mean_abs, ranking, phi, values)


def importance_report(imp: GlobalImportance, base_value: float | None = None,
                      semantics: str = "path-conditional") -> dict:
    return {
        "semantics": semantics,
        "n_samples": int(imp.phi.shape[0]),
        "base_value": base_value,
        "ranking": [{"rank": r + 1, "feature": imp.feature_names[j], "index": int(j),
                     "mean_abs_phi": float(imp.mean_abs_phi[j])}
                    for r, j in enumerate(imp.ranking)],
    }


def write_importance(imp: GlobalImportance, path, **kw) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(importance_report(imp, **kw), fh, indent=2)
        fh.write("\n")


def write_beeswarm(imp: GlobalImportance, stream, sample_ids=None) -> None:
    ids = sample_ids if sample_ids is not None else range(imp.phi.shape[0])
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(BEESWARM_HEADER)
    for i, sid in enumerate(ids):
        for j, name in enumerate(imp.feature_names):
            w.writerow((sid, name, repr(float(imp.phi[i, j])), repr(float(imp.values[i, j]))))


def read_beeswarm(stream) -> list[tuple[str, str, float, float]]:
    r = csv.reader(stream)
    if tuple(next(r, ())) != BEESWARM_HEADER:
        raise ValueError("missing beeswarm header")
    return [(a, b, float(c), float(d)) for a, b, c, d in r]
