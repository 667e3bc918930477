"""Linear and nearest-neighbour baselines."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class RankDeficientWarning(UserWarning):
    pass


@dataclass
class LinearModel:
    kind: str
    weights: np.ndarray
    intercept: float
    ridge_lambda: float = 0.0
    fallback: bool = False  # OLS that had to be solved as a tiny ridge

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return X @ self.weights + self.intercept


def fit_linear(kind: str, X, y, ridge_lambda: float = 1.0,
               fallback_lambda: float = 1e-8) -> LinearModel:
    """Least squares ("OLS") or ridge with an unpenalised intercept.

    OLS on a design that is rank deficient after adding the intercept is
    solved as a ridge with ``fallback_lambda`` and flagged on the model.
    """
    if kind not in ("OLS", "Ridge"):
        raise ValueError(f"unknown linear model {kind!r}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    lam = ridge_lambda if kind == "Ridge" else 0.0
    fallback = False
    if kind == "OLS" and np.linalg.matrix_rank(np.column_stack([np.ones(n), X])) < p + 1:
        warnings.warn(f"OLS design is rank deficient; solved as ridge with lambda={fallback_lambda}",
                      RankDeficientWarning, stacklevel=2)
        lam, fallback = fallback_lambda, True
    if lam < 0:
        raise ValueError("ridge_lambda must be >= 0")
    if lam == 0:
        w = np.linalg.lstsq(Xc, yc, rcond=None)[0]
    else:
        w = np.linalg.solve(Xc.T @ Xc + lam * np.eye(p), Xc.T @ yc)
    return LinearModel(kind, w, float(y_mean - x_mean @ w), lam, fallback)


@dataclass
class KNNModel:
    X: np.ndarray
    y: np.ndarray
    k: int

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty(len(X))
        for i, row in enumerate(X):
            d2 = np.sum((self.X - row) ** 2, axis=1)
            # stable sort: equal distances resolve to the earlier training row
            nearest = np.argsort(d2, kind="stable")[: self.k]
            out[i] = self.y[nearest].mean()
        return out


def fit_knn(X, y, k: int = 5) -> KNNModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not 1 <= k <= len(X):
        raise ValueError(f"k must lie in [1, {len(X)}], got {k}")
    return KNNModel(X.copy(), y.copy(), k)
