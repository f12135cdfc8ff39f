"""Random forest of bootstrapped CART trees with mean aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cart import Tree, grow_tree


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]

    def tree_predictions(self, X: np.ndarray) -> np.ndarray:
        return np.stack([t.predict(X) for t in self.trees])

    def predict(self, X: np.ndarray) -> np.ndarray:
        # tree-by-tree accumulation keeps each row's value independent of the batch
        total = np.zeros(np.asarray(X).shape[0])
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)


def fit_forest(X: np.ndarray, y: np.ndarray, n_trees: int = 100, mtry: int | None = None,
               min_leaf: int = 2, max_depth: int = -1, bootstrap: bool = True,
               seed: int = 0) -> Forest:
    X = np.ascontiguousarray(X, dtype=float)
    n, d = X.shape
    if mtry is None:
        mtry = max(1, d // 3)
    ss = np.random.SeedSequence(seed)
    trees = []
    for child in ss.spawn(n_trees):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
        tree_seed = int(child.generate_state(1)[0])
        tree, _ = grow_tree(X, y, idx, max_depth=max_depth, min_leaf=min_leaf, mtry=mtry,
                            seed=tree_seed)
        trees.append(tree)
    return Forest(tuple(trees))
