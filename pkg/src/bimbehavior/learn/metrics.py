from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateTargetError(ValueError):
    """R^2 is undefined when every target is equal."""


@dataclass(frozen=True)
class EvaluationReport:
    rmse: float
    r2: float | None
    n_test: int


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if len(y) != len(y_hat):
        raise ValueError(f"length mismatch: {len(y)} targets vs {len(y_hat)} predictions")
    return y, y_hat


def rmse(y, y_hat) -> float:
    """Root of the mean squared residual."""
    y, y_hat = _pair(y, y_hat)
    if len(y) == 0:
        raise ValueError("rmse needs at least one pair")
    return math.sqrt(float(np.mean((y_hat - y) ** 2)))


def r2(y, y_hat) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot."""
    y, y_hat = _pair(y, y_hat)
    if len(y) < 2:
        raise ValueError("r2 needs at least two pairs")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        raise DegenerateTargetError("constant targets: R^2 undefined")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot


def evaluate(y, y_hat) -> EvaluationReport:
    try:
        score = r2(y, y_hat)
    except (DegenerateTargetError, ValueError):
        score = None
    return EvaluationReport(rmse(y, y_hat), score, len(np.ravel(y)))
