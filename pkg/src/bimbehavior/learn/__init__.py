"""Model suite, splitting and regression metrics."""

from .data import Dataset, SplitConfig, split, split_indices
from .forest import ForestKind, ForestModel, ForestParams, default_params, fit_forest
from .linear import KNNModel, LinearModel, RankDeficientWarning, fit_knn, fit_linear
from .metrics import DegenerateTargetError, EvaluationReport, evaluate, r2, rmse
from .modelio import load_model, save_model
from .suite import LeaderboardRow, ModelSpec, compare_models, default_suite, fit_model
from .trees import Tree, grow_tree

__all__ = [
    "Dataset", "SplitConfig", "split", "split_indices",
    "ForestKind", "ForestModel", "ForestParams", "default_params", "fit_forest",
    "KNNModel", "LinearModel", "RankDeficientWarning", "fit_knn", "fit_linear",
    "DegenerateTargetError", "EvaluationReport", "evaluate", "r2", "rmse",
    "load_model", "save_model",
    "LeaderboardRow", "ModelSpec", "compare_models", "default_suite", "fit_model",
    "Tree", "grow_tree",
]
