"""Gradient boosting with squared, Laplace and Student-t losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cart import Tree, grow_tree

LOSSES = ("squared", "laplace", "tdist")


@dataclass(frozen=True)
class BoostedTrees:
    init: float
    shrinkage: float
    trees: tuple[Tree, ...]

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.full(np.asarray(X).shape[0], self.init)
        for tree in self.trees:
            out += self.shrinkage * tree.predict(X)
        return out


def _robust_scale(r: np.ndarray) -> float:
    mad = 1.4826 * float(np.median(np.abs(r - np.median(r))))
    if mad > 0:
        return mad
    std = float(np.std(r))
    return std if std > 0 else 1.0


def fit_gbm(X: np.ndarray, y: np.ndarray, loss: str = "squared", n_rounds: int = 100,
            shrinkage: float = 0.1, max_depth: int = 3, min_leaf: int = 1, nu: float = 4.0,
            seed: int = 0, trace: list | None = None) -> BoostedTrees:
    """Fit ``n_rounds`` depth-limited trees to loss gradients.

    Leaf values: mean residual (squared), median residual (laplace), or one
    Newton step on the t loss using its expected curvature (tdist). The t
    residual scale is fixed up front as the MAD of ``y`` about the initial fit.
    ``trace`` receives the training MSE after every round when given.
    """
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    init = float(np.median(y)) if loss == "laplace" else float(np.mean(y))
    F = np.full(y.size, init)
    # expected curvature of the t loss per unit-scale residual
    fisher = (nu + 1.0) / (nu + 3.0)
    scale = _robust_scale(y - init) if loss == "tdist" else 1.0
    trees = []
    for m in range(n_rounds):
        r = y - F
        if loss == "squared":
            grad = r
        elif loss == "laplace":
            grad = np.sign(r)
        else:
            u = r / scale
            grad = (nu + 1.0) * u / (nu + u * u)
        tree, leaf_of = grow_tree(X, grad, max_depth=max_depth, min_leaf=min_leaf, seed=seed + m)
        if loss != "squared":
            value = tree.value.copy()
            for leaf in np.unique(leaf_of):
                rl = r[leaf_of == leaf]
                if loss == "laplace":
                    value[leaf] = np.median(rl)
                else:
                    value[leaf] = scale * float(np.mean(grad[leaf_of == leaf])) / fisher
            tree = Tree(tree.feature, tree.threshold, tree.left, tree.right, value)
        F = F + shrinkage * tree.value[leaf_of]
        trees.append(tree)
        if trace is not None:
            trace.append(float(np.mean((y - F) ** 2)))
    return BoostedTrees(init, shrinkage, tuple(trees))
