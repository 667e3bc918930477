"""JSON model files. Trees are written as nested node objects."""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .forest import ForestKind, ForestModel, ForestParams
from .linear import KNNModel, LinearModel
from .trees import LEAF, Tree

FORMAT_VERSION = 1


def tree_to_dict(tree: Tree) -> dict:
    def node(i):
        base = {"value": float(tree.value[i]), "count": int(tree.count[i])}
        if tree.left[i] == LEAF:
            return {"leaf": True, **base}
        return {"feature": int(tree.feature[i]), "threshold": float(tree.threshold[i]), **base,
                "left": node(tree.left[i]), "right": node(tree.right[i])}
    return node(0)


def tree_from_dict(root: dict) -> Tree:
    left, right, feature, threshold, value, count = [], [], [], [], [], []

    def add(d) -> int:
        i = len(left)
        left.append(LEAF)
        right.append(LEAF)
        feature.append(-2 if d.get("leaf") else int(d["feature"]))
        threshold.append(np.nan if d.get("leaf") else float(d["threshold"]))
        value.append(float(d["value"]))
        count.append(int(d["count"]))
        return i

    add(root)
    stack = [(0, root)]
    while stack:
        i, d = stack.pop()
        if d.get("leaf"):
            continue
        li = add(d["left"])
        ri = add(d["right"])
        left[i], right[i] = li, ri
        stack.append((ri, d["right"]))
        stack.append((li, d["left"]))
    return Tree(np.array(left, np.int64), np.array(right, np.int64),
                np.array(feature, np.int64), np.array(threshold), np.array(value),
                np.array(count, np.int64))


def model_to_dict(model) -> dict:
    if isinstance(model, ForestModel):
        return {"version": FORMAT_VERSION, "kind": model.kind.value,
                "params": asdict(model.params), "seed": model.seed,
                "n_features": model.n_features,
                "trees": [tree_to_dict(t) for t in model.trees]}
    if isinstance(model, LinearModel):
        return {"version": FORMAT_VERSION, "kind": model.kind,
                "params": {"ridge_lambda": model.ridge_lambda, "fallback": model.fallback},
                "weights": model.weights.tolist(), "intercept": model.intercept}
    if isinstance(model, KNNModel):
        return {"version": FORMAT_VERSION, "kind": "kNN", "params": {"k": model.k},
                "X": model.X.tolist(), "y": model.y.tolist()}
    raise TypeError(f"cannot serialise {type(model).__name__}")


def model_from_dict(d: dict):
    if d.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model file version {d.get('version')!r}")
    kind = d["kind"]
    if kind in ("OLS", "Ridge"):
        return LinearModel(kind, np.array(d["weights"]), float(d["intercept"]),
                           d["params"]["ridge_lambda"], d["params"]["fallback"])
    if kind == "kNN":
        return KNNModel(np.array(d["X"]), np.array(d["y"]), int(d["params"]["k"]))
    return ForestModel(ForestKind(kind), ForestParams(**d["params"]), int(d["seed"]),
                       int(d["n_features"]), [tree_from_dict(t) for t in d["trees"]])


def dumps(model) -> str:
    return json.dumps(model_to_dict(model), separators=(",", ":"))


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
