"""The fixed model suite and the leaderboard comparison."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, SplitConfig, split
from .forest import ForestKind, ForestParams, default_params, fit_forest
from .linear import RankDeficientWarning, fit_knn, fit_linear
from .metrics import rmse, r2

FOREST_KINDS = {k.value for k in ForestKind}
MODEL_KINDS = ("OLS", "Ridge", "kNN") + tuple(k.value for k in ForestKind)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")


def default_suite(n_features: int = 29) -> list[ModelSpec]:
    return [
        ModelSpec("OLS", "OLS"),
        ModelSpec("Ridge", "Ridge", {"ridge_lambda": 1.0}),
        ModelSpec("kNN", "kNN", {"k": 5}),
        ModelSpec("CART", "CART"),
        ModelSpec("Bagging", "Bagging", {"n_trees": 50}),
        ModelSpec("RandomForest", "RandomForest",
                  {"n_trees": 100, "max_features": math.ceil(n_features / 3)}),
        ModelSpec("ExtraTrees", "ExtraTrees", {"n_trees": 100, "max_features": n_features}),
    ]


def fit_model(spec: ModelSpec, X, y, seed: int = 0, workers: int = 1):
    if spec.kind in ("OLS", "Ridge"):
        return fit_linear(spec.kind, X, y, **spec.params)
    if spec.kind == "kNN":
        return fit_knn(X, y, **spec.params)
    base = default_params(ForestKind(spec.kind), np.shape(X)[1])
    params = ForestParams(**{**base.__dict__, **spec.params})
    return fit_forest(spec.kind, X, y, params, seed=seed, workers=workers)


@dataclass
class LeaderboardRow:
    name: str
    kind: str
    train_rmse: float | None = None
    test_rmse: float | None = None
    train_r2: float | None = None
    test_r2: float | None = None
    error: str | None = None
    note: str | None = None
    model: object = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("name", "kind", "train_rmse", "test_rmse", "train_r2", "test_r2",
                 "error", "note")}


def _sort_key(indexed):
    order, row = indexed
    failed = row.error is not None or row.test_r2 is None
    return (failed, -(row.test_r2 or 0.0), row.test_rmse or 0.0, order)


def compare_models(data: Dataset, suite: list[ModelSpec],
                   config: SplitConfig = SplitConfig(), workers: int = 1,
                   model_seed: int | None = None) -> list[LeaderboardRow]:
    """Train every model on one shared split; best test R^2 first.

    Ties fall to the lower test RMSE, then to suite order. A model that fails
    is listed with its error and sorted last.
    """
    if not suite:
        raise ValueError("model suite is empty")
    train, test = split(data, config)
    seed = config.seed if model_seed is None else model_seed
    rows = []
    for spec in suite:
        row = LeaderboardRow(spec.name, spec.kind)
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                model = fit_model(spec, train.X, train.y, seed=seed, workers=workers)
            notes = [str(w.message) for w in caught
                     if issubclass(w.category, (RankDeficientWarning, RuntimeWarning))]
            row.note = "; ".join(notes) or None
            p_train, p_test = model.predict(train.X), model.predict(test.X)
            row.train_rmse, row.test_rmse = rmse(train.y, p_train), rmse(test.y, p_test)
            row.train_r2, row.test_r2 = r2(train.y, p_train), r2(test.y, p_test)
            row.model = model
        except Exception as exc:  # one broken model must not sink the board
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return [row for _, row in sorted(enumerate(rows), key=_sort_key)]
