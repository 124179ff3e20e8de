"""Gradient-boosted regression trees approximating the steadiness time.

Training happens in log space (the target is strongly right-skewed) with
tail rows beyond 3 standard deviations trimmed as outliers; predictions are
mapped back through exp, so the model can only ever return positive seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, SchemaError, TrainingError
from .trees import FlatTree, TreeEnsemble, grow_regression_tree

MIN_TRAINING_ROWS = 20
OUTLIER_SIGMA = 3.0


@dataclass(frozen=True)
class BoostingHyperparams:
    max_depth: int = 3
    gamma: float = 0.7
    n_estimators: int = 50
    learning_rate: float = 0.1
    subsample: float = 1.0

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "gamma": self.gamma,
            "n_estimators": self.n_estimators,
            "learning_rate": self.learning_rate,
            "subsample": self.subsample,
        }


@dataclass
class ObjectiveBooster:
    trees: list[FlatTree]
    base_score: float
    learning_rate: float
    feature_names: tuple[str, ...]
    hyperparams: BoostingHyperparams
    seed: int
    train_mse_per_stage: list[float]
    _stack: TreeEnsemble | None = field(default=None, repr=False, compare=False)

    def _ensemble(self) -> TreeEnsemble | None:
        if not self.trees:
            return None
        if self._stack is None:
            self._stack = TreeEnsemble.stack(self.trees)
        return self._stack

    def predict_log(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.feature_names):
            raise SchemaError(
                f"expected {len(self.feature_names)} features, got {X.shape[1]}"
            )
        out = np.full(X.shape[0], self.base_score)
        ensemble = self._ensemble()
        if ensemble is not None:
            out += self.learning_rate * ensemble.predict_matrix(X).sum(axis=1)
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predicted steadiness time in seconds (always finite and positive)."""
        return np.exp(self.predict_log(X))


def train_objective_regressor(
    X: np.ndarray,
    y_seconds: np.ndarray,
    feature_names,
    hyperparams: BoostingHyperparams | None = None,
    seed: int = 0,
) -> ObjectiveBooster:
    """Stage-wise least-squares boosting on log-transformed targets.

    A split is kept only when its summed squared-error reduction reaches the
    gamma threshold. With subsample=1 the recorded per-stage training MSE is
    non-increasing by construction.
    """
    X = np.asarray(X, dtype=float)
    y_seconds = np.asarray(y_seconds, dtype=float)
    hp = hyperparams or BoostingHyperparams()
    if np.any(y_seconds <= 0):
        raise TrainingError("steadiness targets must be positive seconds")
    if y_seconds.size < MIN_TRAINING_ROWS:
        raise InsufficientDataError(
            f"objective regressor needs >= {MIN_TRAINING_ROWS} rows, got {y_seconds.size}"
        )

    y_log = np.log(y_seconds)
    std = y_log.std()
    keep = np.abs(y_log - y_log.mean()) <= OUTLIER_SIGMA * std if std > 0 else np.ones(
        y_log.size, dtype=bool
    )
    X = X[keep]
    y_log = y_log[keep]

    rng = np.random.default_rng(seed)
    base = float(y_log.mean())
    pred = np.full(y_log.size, base)
    trees: list[FlatTree] = []
    mse_curve = [float(np.mean((y_log - pred) ** 2))]
    n = y_log.size
    n_sub = max(1, int(round(hp.subsample * n)))
    for _ in range(hp.n_estimators):
        residual = y_log - pred
        rows = (
            np.arange(n)
            if n_sub >= n
            else rng.choice(n, size=n_sub, replace=False)
        )
        tree = grow_regression_tree(
            X[rows],
            residual[rows],
            max_depth=hp.max_depth,
            gamma=hp.gamma,
        )
        trees.append(tree)
        pred = pred + hp.learning_rate * tree.predict(X)
        mse_curve.append(float(np.mean((y_log - pred) ** 2)))

    return ObjectiveBooster(
        trees=trees,
        base_score=base,
        learning_rate=hp.learning_rate,
        feature_names=tuple(feature_names),
        hyperparams=hp,
        seed=seed,
        train_mse_per_stage=mse_curve,
    )


def predict_objective(model: ObjectiveBooster, X: np.ndarray) -> np.ndarray:
    return model.predict(X)
