"""Bundling and persistence of the trained surrogate models.

Models serialize to a versioned JSON layout (hyperparameters plus the
flattened node arrays); loading restores bit-identical predictions because
floats round-trip exactly through JSON's shortest-repr encoding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boosting import BoostingHyperparams, ObjectiveBooster
from .errors import ModelArtifactError
from .features import FeatureSchema
from .forest import ConstraintForest, ForestHyperparams
from .trees import FlatTree

FORMAT = "extropt-model"
VERSION = 1


def _check_header(payload: dict, kind: str, path) -> None:
    if payload.get("format") != FORMAT or payload.get("kind") != kind:
        raise ModelArtifactError(f"{path} is not a {kind} artifact")
    if payload.get("version") != VERSION:
        raise ModelArtifactError(
            f"{path} has version {payload.get('version')}, expected {VERSION}"
        )


def forest_to_dict(model: ConstraintForest) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "constraint_forest",
        "hyperparameters": model.hyperparams.to_dict(),
        "seed": model.seed,
        "classes": model.classes.tolist(),
        "feature_names": list(model.feature_names),
        "trees": [t.to_dict() for t in model.trees],
    }


def forest_from_dict(payload: dict, path="<memory>") -> ConstraintForest:
    _check_header(payload, "constraint_forest", path)
    return ConstraintForest(
        trees=[FlatTree.from_dict(t) for t in payload["trees"]],
        classes=np.asarray(payload["classes"]),
        feature_names=tuple(payload["feature_names"]),
        hyperparams=ForestHyperparams(**payload["hyperparameters"]),
        seed=payload["seed"],
    )


def booster_to_dict(model: ObjectiveBooster) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "objective_booster",
        "hyperparameters": model.hyperparams.to_dict(),
        "seed": model.seed,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "feature_names": list(model.feature_names),
        "train_mse_per_stage": list(model.train_mse_per_stage),
        "trees": [t.to_dict() for t in model.trees],
    }


def booster_from_dict(payload: dict, path="<memory>") -> ObjectiveBooster:
    _check_header(payload, "objective_booster", path)
    return ObjectiveBooster(
        trees=[FlatTree.from_dict(t) for t in payload["trees"]],
        base_score=payload["base_score"],
        learning_rate=payload["learning_rate"],
        feature_names=tuple(payload["feature_names"]),
        hyperparams=BoostingHyperparams(**payload["hyperparameters"]),
        seed=payload["seed"],
        train_mse_per_stage=list(payload["train_mse_per_stage"]),
    )


@dataclass
class SurrogatePair:
    """The two trained surrogates plus the feature schema they share."""

    constraint: ConstraintForest
    objective: ObjectiveBooster
    schema: FeatureSchema

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "constraint.json").write_text(json.dumps(forest_to_dict(self.constraint)))
        (directory / "objective.json").write_text(json.dumps(booster_to_dict(self.objective)))
        (directory / "schema.json").write_text(json.dumps(self.schema.to_dict(), indent=2))

    @classmethod
    def load(cls, directory) -> "SurrogatePair":
        directory = Path(directory)
        try:
            constraint = forest_from_dict(
                json.loads((directory / "constraint.json").read_text()),
                directory / "constraint.json",
            )
            objective = booster_from_dict(
                json.loads((directory / "objective.json").read_text()),
                directory / "objective.json",
            )
            schema = FeatureSchema.from_dict(
                json.loads((directory / "schema.json").read_text())
            )
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ModelArtifactError(f"cannot load surrogate models from {directory}: {exc}") from exc
        names = schema.feature_names
        if constraint.feature_names != names or objective.feature_names != names:
            raise ModelArtifactError(
                f"feature schema in {directory} does not match the trained models"
            )
        return cls(constraint=constraint, objective=objective, schema=schema)
