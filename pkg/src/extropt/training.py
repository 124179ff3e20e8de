"""Surrogate training pipeline: rebalance, cross-validate, fit, report."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .boosting import BoostingHyperparams, train_objective_regressor
from .errors import InsufficientDataError, UndefinedCorrelationError
from .features import FeatureSchema
from .forest import ForestHyperparams, train_constraint_classifier
from .metrics import confusion_matrix, f1_score, kendall_tau, stratified_kfold
from .resampling import smote_tomek
from .surrogates import SurrogatePair

# hyperparameter search spaces explored by the grid runner
FOREST_GRID = {
    "min_samples_leaf": (5, 10, 25, 50, 100),
    "min_samples_split": (2, 3, 4, 5, 6, 7),
}
BOOSTING_GRID = {
    "max_depth": (2, 3, 4, 5),
    "gamma": (0.0, 0.5, 0.7, 1.0, 2.0, 4.0, 8.0),
    "n_estimators": (5, 10, 25, 50, 75, 100, 150),
    "learning_rate": (0.1, 0.25, 0.4, 0.55, 0.7),
    "subsample": (0.1, 0.25, 0.5, 0.75, 1.0),
}

CV_FOLDS = 5


@dataclass
class TrainingResult:
    surrogates: SurrogatePair
    report: dict


def _plain_kfold(n: int, k: int, seed: int):
    idx = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(idx, k)
    out = []
    for f in range(k):
        val = folds[f]
        train = np.concatenate([folds[j] for j in range(k) if j != f])
        out.append((train, val))
    return out


def _feature_ids(X: np.ndarray):
    return tuple(f"f{i}" for i in range(X.shape[1]))


def _classifier_cv(X, y, hp, seed, k):
    scores = []
    classes = np.unique(y)
    names = _feature_ids(X)
    pooled = np.zeros((classes.size, classes.size), dtype=np.int64)
    for fold, (tr, va) in enumerate(stratified_kfold(y, k=k, seed=seed)):
        Xr, yr = smote_tomek(X[tr], y[tr], seed=seed + fold)
        model = train_constraint_classifier(Xr, yr, names, hp, seed=seed + fold)
        pred = model.predict(X[va])
        scores.append(f1_score(pred, y[va]))
        pooled += confusion_matrix(y[va], pred, classes)
    return scores, pooled, classes


def _regressor_cv(X, y, hp, seed, k):
    scores = []
    names = _feature_ids(X)
    for fold, (tr, va) in enumerate(_plain_kfold(y.size, k, seed)):
        model = train_objective_regressor(X[tr], y[tr], names, hp, seed=seed + fold)
        pred = model.predict(X[va])
        try:
            scores.append(kendall_tau(pred, y[va]))
        except UndefinedCorrelationError:
            scores.append(0.0)
    return scores


def train_surrogates(
    table: pd.DataFrame,
    forest_hp: ForestHyperparams | None = None,
    boosting_hp: BoostingHyperparams | None = None,
    seed: int = 0,
    cv_folds: int = CV_FOLDS,
) -> TrainingResult:
    """Train both surrogates on a labeled-extrusion table.

    The constraint classifier sees every extrusion (classes rebalanced by
    SMOTE followed by Tomek cleaning, fitted inside each fold); the
    objective regressor sees only class-1 rows. Cross-validated macro-F1 /
    Kendall tau land in the training report together with the pooled
    out-of-fold confusion matrix.
    """
    forest_hp = forest_hp or ForestHyperparams()
    boosting_hp = boosting_hp or BoostingHyperparams()
    schema = FeatureSchema.from_table(table)
    names = schema.feature_names

    X = schema.encode(table)
    y = table["feasibility_class"].to_numpy(dtype=np.int64)

    class1 = table[table["feasibility_class"] == 1]
    if len(class1) < 20:
        raise InsufficientDataError(
            f"only {len(class1)} feasible rows; cannot train the objective surrogate"
        )
    X1 = schema.encode(class1)
    y1 = class1["steadiness_time"].to_numpy(dtype=float)

    f1_scores, pooled_confusion, classes = _classifier_cv(X, y, forest_hp, seed, cv_folds)
    kendall_scores = _regressor_cv(X1, y1, boosting_hp, seed, cv_folds)

    Xr, yr = smote_tomek(X, y, seed=seed)
    constraint = train_constraint_classifier(Xr, yr, names, forest_hp, seed=seed)
    objective = train_objective_regressor(X1, y1, names, boosting_hp, seed=seed)

    resampled = {int(c): int(n) for c, n in zip(*np.unique(yr, return_counts=True))}
    report = {
        "n_rows": int(len(table)),
        "seed": seed,
        "cv_folds": cv_folds,
        "classifier": {
            "hyperparameters": forest_hp.to_dict(),
            "cv_f1": [float(s) for s in f1_scores],
            "cv_f1_mean": float(np.mean(f1_scores)),
            "cv_f1_std": float(np.std(f1_scores)),
            "classes": [int(c) for c in classes],
            "oof_confusion": pooled_confusion.tolist(),
            "resampled_counts": resampled,
        },
        "regressor": {
            "hyperparameters": boosting_hp.to_dict(),
            "cv_kendall": [float(s) for s in kendall_scores],
            "cv_kendall_mean": float(np.mean(kendall_scores)),
            "cv_kendall_std": float(np.std(kendall_scores)),
            "n_feasible_rows": int(len(class1)),
        },
    }
    surrogates = SurrogatePair(constraint=constraint, objective=objective, schema=schema)
    return TrainingResult(surrogates=surrogates, report=report)


def grid_combinations(grid: dict) -> list[dict]:
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def search_forest_hyperparams(
    X: np.ndarray,
    y: np.ndarray,
    grid: dict | None = None,
    seed: int = 0,
    cv_folds: int = CV_FOLDS,
) -> tuple[ForestHyperparams, list[dict]]:
    """Exhaustive CV grid search for the classifier; returns best + trace."""
    results = []
    best = None
    for params in grid_combinations(grid or FOREST_GRID):
        hp = ForestHyperparams(**params)
        scores, _, _ = _classifier_cv(X, y, hp, seed, cv_folds)
        mean = float(np.mean(scores))
        results.append({"params": params, "cv_f1_mean": mean})
        if best is None or mean > best[0]:
            best = (mean, hp)
    return best[1], results


def search_boosting_hyperparams(
    X1: np.ndarray,
    y1: np.ndarray,
    grid: dict | None = None,
    seed: int = 0,
    cv_folds: int = CV_FOLDS,
) -> tuple[BoostingHyperparams, list[dict]]:
    """Exhaustive CV grid search for the regressor; returns best + trace."""
    results = []
    best = None
    for params in grid_combinations(grid or BOOSTING_GRID):
        hp = BoostingHyperparams(**params)
        scores = _regressor_cv(X1, y1, hp, seed, cv_folds)
        mean = float(np.mean(scores))
        results.append({"params": params, "cv_kendall_mean": mean})
        if best is None or mean > best[0]:
            best = (mean, hp)
    return best[1], results
