"""Tree ensembles: single CART, bagging, random forest and extra-trees."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np

from .trees import Tree, grow_tree


class ForestKind(str, Enum):
    CART = "CART"
    BAGGING = "Bagging"
    RANDOM_FOREST = "RandomForest"
    EXTRA_TREES = "ExtraTrees"


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: int | None = None  # None means every feature
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_depth: int | None = None
    bootstrap: bool = False

    def validate(self, n_features: int) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        k = self.max_features
        if k is not None and not 1 <= k <= n_features:
            raise ValueError(f"max_features must lie in [1, {n_features}], got {k}")
        if self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise ValueError("min_samples_split must be >= 2 and min_samples_leaf >= 1")


def default_params(kind: ForestKind, n_features: int = 29) -> ForestParams:
    kind = ForestKind(kind)
    if kind is ForestKind.CART:
        return ForestParams(n_trees=1)
    if kind is ForestKind.BAGGING:
        return ForestParams(n_trees=50, bootstrap=True)
    if kind is ForestKind.RANDOM_FOREST:
        return ForestParams(n_trees=100, max_features=math.ceil(n_features / 3), bootstrap=True)
    return ForestParams(n_trees=100)


@dataclass
class ForestModel:
    kind: ForestKind
    params: ForestParams
    seed: int
    n_features: int
    trees: list[Tree] = field(default_factory=list)

    def predict(self, X: np.ndarray) -> np.ndarray:
        # running mean in tree order: exact whenever all trees agree
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        mean = self.trees[0].predict(X)
        for i, tree in enumerate(self.trees[1:], start=2):
            mean += (tree.predict(X) - mean) / i
        return mean

    def describe(self) -> dict:
        return {"kind": self.kind.value, "seed": self.seed, **asdict(self.params)}


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for tree ``index`` of a model seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def fit_forest(kind: ForestKind | str, X: np.ndarray, y: np.ndarray,
               params: ForestParams | None = None, seed: int = 0,
               workers: int = 1) -> ForestModel:
    """Fit a tree ensemble; the result depends only on (data, params, seed).

    CART is a single exhaustive-split tree on the full sample. Bagging grows
    exhaustive-split trees on bootstrap resamples; RandomForest additionally
    restricts each node to a random feature subset. ExtraTrees uses the full
    sample and one uniform random threshold per candidate feature.
    """
    kind = ForestKind(kind)
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per target")
    n, p = X.shape
    if n == 0:
        raise ValueError("cannot fit on an empty training set")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("training data must be finite")
    params = params or default_params(kind, p)
    if kind is ForestKind.CART:
        params = replace(params, n_trees=1, bootstrap=False)
    params.validate(p)
    k = params.max_features or p
    if np.ptp(y) > 0 and np.all(np.ptp(X, axis=0) == 0):
        warnings.warn("all features are constant; model reduces to the target mean",
                      RuntimeWarning, stacklevel=2)

    def one(index: int) -> Tree:
        rng = tree_rng(seed, index)
        samples = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        return grow_tree(X, y, samples, random_splits=kind is ForestKind.EXTRA_TREES,
                         max_features=k, rng=rng,
                         min_samples_split=params.min_samples_split,
                         min_samples_leaf=params.min_samples_leaf,
                         max_depth=params.max_depth)

    if workers > 1 and params.n_trees > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(one, range(params.n_trees)))
    else:
        trees = [one(i) for i in range(params.n_trees)]
    return ForestModel(kind, params, seed, p, trees)
