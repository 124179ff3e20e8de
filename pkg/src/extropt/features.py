"""Model feature encoding and the per-product decision space.

The labeled table mixes continuous search variables, usage/change flags and
categorical context. Surrogates consume a one-hot encoded matrix with a
frozen column order; the optimizer evolves only the continuous search
variables that actually vary in a product's history, with everything else
frozen to that product's typical values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import InsufficientDataError, SchemaError

SEARCH_STAT_SUFFIXES = ("_min", "_max", "_mean")
CATEGORICAL_COLUMNS = ("product", "material_first", "material_last", "die_first", "die_last")
CHANGE_FLAGS = ("material_changed", "die_changed")

_SPEED_RE = re.compile(r"^speed_target_(\d+)$")
_ACCEL_RE = re.compile(r"^accel_start_(\d+)$")
_USAGE_RE = re.compile(r"^usage_(\d+)$")


def extruder_indices(columns) -> list[int]:
    ks = sorted(int(m.group(1)) for c in columns if (m := _SPEED_RE.match(c)))
    return ks


def search_variable_columns(columns) -> list[str]:
    """Continuous decision variables: window stats plus startup speed/accel."""
    stats = [c for c in columns if c.endswith(SEARCH_STAT_SUFFIXES)]
    per_extruder = []
    for k in extruder_indices(columns):
        per_extruder += [f"speed_target_{k}", f"accel_start_{k}"]
    return stats + per_extruder


def flag_columns(columns) -> list[str]:
    usage = [f"usage_{k}" for k in extruder_indices(columns)]
    return usage + [c for c in CHANGE_FLAGS if c in columns]


@dataclass(frozen=True)
class FeatureSchema:
    """Fixed column order for everything the surrogate models see."""

    numeric: tuple[str, ...]
    categorical: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def from_table(cls, table: pd.DataFrame) -> "FeatureSchema":
        numeric = tuple(search_variable_columns(table.columns) + flag_columns(table.columns))
        categorical = tuple(
            (col, tuple(sorted(table[col].astype(str).unique())))
            for col in CATEGORICAL_COLUMNS
            if col in table.columns
        )
        return cls(numeric=numeric, categorical=categorical)

    @property
    def feature_names(self) -> tuple[str, ...]:
        names = list(self.numeric)
        for col, vocab in self.categorical:
            names += [f"{col}={v}" for v in vocab]
        return tuple(names)

    def encode(self, table: pd.DataFrame) -> np.ndarray:
        """One-hot encode a labeled table slice into the model matrix."""
        parts = []
        for col in self.numeric:
            if col not in table.columns:
                raise SchemaError(f"missing numeric column {col!r}")
            parts.append(table[col].to_numpy(dtype=float)[:, None])
        for col, vocab in self.categorical:
            if col not in table.columns:
                raise SchemaError(f"missing categorical column {col!r}")
            values = table[col].astype(str).to_numpy()
            block = np.zeros((len(table), len(vocab)))
            hit = np.zeros(len(table), dtype=bool)
            for j, v in enumerate(vocab):
                mask = values == v
                block[mask, j] = 1.0
                hit |= mask
            if not hit.all():
                unknown = sorted(set(values[~hit]))
                raise SchemaError(f"unknown {col!r} values {unknown}")
            parts.append(block)
        return np.hstack(parts)

    def to_dict(self) -> dict:
        return {
            "numeric": list(self.numeric),
            "categorical": [[c, list(v)] for c, v in self.categorical],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FeatureSchema":
        return cls(
            numeric=tuple(payload["numeric"]),
            categorical=tuple((c, tuple(v)) for c, v in payload["categorical"]),
        )


def _mode(series: pd.Series):
    return series.mode().iloc[0]


@dataclass
class DecisionSpace:
    """What the optimizer may move for one product, and how to build model rows.

    ``evolvable`` lists the decision columns (those with a positive
    historical range for the product); ``bounds`` holds their historical
    [min, max]. ``template`` is a fully encoded model row carrying every
    frozen value; assembling a population writes the evolvable coordinates
    into their slots.
    """

    product: str
    evolvable: tuple[str, ...]
    bounds: np.ndarray
    template: np.ndarray
    insert: np.ndarray
    speed_accel: tuple[tuple[int, int], ...]
    feature_names: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return len(self.evolvable)

    def assemble(self, P: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if P.shape[1] != self.dimension:
            raise SchemaError(
                f"expected {self.dimension} decision coordinates, got {P.shape[1]}"
            )
        X = np.tile(self.template, (P.shape[0], 1))
        X[:, self.insert] = P
        return X


def build_decision_space(
    table: pd.DataFrame,
    schema: FeatureSchema,
    product: str,
) -> DecisionSpace:
    """Derive the evolvable box and frozen context from a product's history."""
    sub = table[table["product"].astype(str) == str(product)]
    if len(sub) == 0:
        raise InsufficientDataError(f"no history for product {product!r}")
    class1 = sub[sub["feasibility_class"] == 1]
    if len(class1) == 0:
        raise InsufficientDataError(f"no feasible history for product {product!r}")

    search_cols = search_variable_columns(table.columns)
    lows = sub[search_cols].min()
    highs = sub[search_cols].max()
    evolvable = [c for c in search_cols if highs[c] > lows[c]]
    bounds = np.vstack(
        [lows[evolvable].to_numpy(dtype=float), highs[evolvable].to_numpy(dtype=float)]
    )

    frozen = {}
    for c in search_cols:
        if c not in evolvable:
            frozen[c] = float(lows[c])
        else:
            frozen[c] = float(class1[c].median())
    for c in flag_columns(table.columns):
        frozen[c] = int(_mode(class1[c]))
    for c, _ in schema.categorical:
        frozen[c] = str(_mode(class1[c].astype(str)))

    template = schema.encode(pd.DataFrame([frozen]))[0]
    names = schema.feature_names
    name_pos = {n: i for i, n in enumerate(names)}
    insert = np.asarray([name_pos[c] for c in evolvable], dtype=np.int64)

    pairs = []
    for k in extruder_indices(table.columns):
        if frozen.get(f"usage_{k}", 0):
            pairs.append((name_pos[f"speed_target_{k}"], name_pos[f"accel_start_{k}"]))
    if not pairs:
        raise InsufficientDataError(
            f"product {product!r} has no used extruder in its feasible history"
        )

    return DecisionSpace(
        product=str(product),
        evolvable=tuple(evolvable),
        bounds=bounds,
        template=template,
        insert=insert,
        speed_accel=tuple(pairs),
        feature_names=names,
    )
