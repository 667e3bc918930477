from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.groups = np.asarray(self.groups)
        if not len(self.X) == len(self.y) == len(self.groups):
            raise ValueError("X, y and groups must have the same number of rows")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite values")

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], self.groups[rows])


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.2
    seed: int = 0
    grouped: bool = False

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")


def split_indices(data: Dataset, config: SplitConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train rows, test rows); seeded, disjoint and exhaustive."""
    n = len(data)
    rng = np.random.default_rng(config.seed)
    if config.grouped:
        groups = np.unique(data.groups)
        if len(groups) < 2:
            raise ValueError("a grouped split needs at least two groups")
        n_test = min(max(1, round(config.test_fraction * len(groups))), len(groups) - 1)
        test_groups = rng.permutation(groups)[:n_test]
        mask = np.isin(data.groups, test_groups)
    else:
        n_test = max(1, math.ceil(config.test_fraction * n))
        if n < 2 or n_test >= n:
            raise ValueError(f"{n} rows are too few for a {config.test_fraction} test split")
        mask = np.zeros(n, dtype=bool)
        mask[rng.permutation(n)[:n_test]] = True
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def split(data: Dataset, config: SplitConfig = SplitConfig()) -> tuple[Dataset, Dataset]:
    train, test = split_indices(data, config)
    return data.subset(train), data.subset(test)
