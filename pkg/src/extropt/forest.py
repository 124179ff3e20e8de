"""Random-forest classifier serving the minimum-quality constraint."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError, TrainingError
from .trees import FlatTree, TreeEnsemble, grow_classification_tree


@dataclass(frozen=True)
class ForestHyperparams:
    n_trees: int = 100
    min_samples_leaf: int = 5
    min_samples_split: int = 7

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "min_samples_leaf": self.min_samples_leaf,
            "min_samples_split": self.min_samples_split,
        }


@dataclass
class ConstraintForest:
    """Bagged Gini trees voting on the feasibility class of a configuration."""

    trees: list[FlatTree]
    classes: np.ndarray
    feature_names: tuple[str, ...]
    hyperparams: ForestHyperparams
    seed: int
    _stack: TreeEnsemble | None = field(default=None, repr=False, compare=False)

    def _ensemble(self) -> TreeEnsemble:
        if self._stack is None:
            self._stack = TreeEnsemble.stack(self.trees)
        return self._stack

    def tree_votes(self, X: np.ndarray) -> np.ndarray:
        """Per-tree predicted class labels, shape (n_rows, n_trees)."""
        idx = self._ensemble().predict_matrix(X).astype(np.int64)
        return self.classes[idx]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.feature_names):
            raise SchemaError(
                f"expected {len(self.feature_names)} features, got {X.shape[1]}"
            )
        idx = self._ensemble().predict_matrix(X).astype(np.int64)
        counts = np.zeros((X.shape[0], self.classes.size), dtype=np.int64)
        for c in range(self.classes.size):
            counts[:, c] = (idx == c).sum(axis=1)
        # plurality vote; ties resolved toward the higher (worse) class
        winner = self.classes.size - 1 - np.argmax(counts[:, ::-1], axis=1)
        return self.classes[winner]


def train_constraint_classifier(
    X: np.ndarray,
    y: np.ndarray,
    feature_names,
    hyperparams: ForestHyperparams | None = None,
    seed: int = 0,
) -> ConstraintForest:
    """Fit the constraint forest: bootstrap rows, random feature subset per split."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    hp = hyperparams or ForestHyperparams()
    classes = np.unique(y)
    if classes.size < 2:
        raise TrainingError("constraint classifier needs at least two classes")
    class_index = {c: i for i, c in enumerate(classes)}
    y_idx = np.asarray([class_index[v] for v in y], dtype=np.int64)
    mtry = max(1, int(math.ceil(math.sqrt(X.shape[1]))))
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(hp.n_trees):
        rows = rng.integers(0, X.shape[0], size=X.shape[0])
        trees.append(
            grow_classification_tree(
                X[rows],
                y_idx[rows],
                classes.size,
                rng,
                min_samples_leaf=hp.min_samples_leaf,
                min_samples_split=hp.min_samples_split,
                max_features=mtry,
            )
        )
    return ConstraintForest(
        trees=trees,
        classes=classes,
        feature_names=tuple(feature_names),
        hyperparams=hp,
        seed=seed,
    )


def predict_class(model: ConstraintForest, X: np.ndarray) -> np.ndarray:
    return model.predict(X)
