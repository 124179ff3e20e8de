"""Data-driven initial population: density samples blended with best history."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import InsufficientDataError
from .features import DecisionSpace, FeatureSchema, build_decision_space
from .mixture import GaussianMixture, sample_gmm, select_gmm_bic
from .scaling import StandardScaler

DEFAULT_DENSITY_RATE = 0.25
MAX_GMM_COMPONENTS = 5


@dataclass
class InitContext:
    """Everything the seeding step needs, prefitted once per product.

    ``best_rows`` holds the product's feasible decision vectors sorted by
    ascending steadiness time (ties keep the earlier extrusion first), so
    the top of the array is the best recorded configuration.
    """

    space: DecisionSpace
    scaler: StandardScaler
    gmm: GaussianMixture
    best_rows: np.ndarray
    best_times: np.ndarray


def build_init_context(
    table: pd.DataFrame,
    schema: FeatureSchema,
    product: str,
    seed: int = 0,
    max_components: int = MAX_GMM_COMPONENTS,
) -> InitContext:
    space = build_decision_space(table, schema, product)
    sub = table[table["product"].astype(str) == str(product)]
    class1 = sub[sub["feasibility_class"] == 1]
    # stable sort keeps chronological order among equal steadiness times
    class1 = class1.sort_values("steadiness_time", kind="stable")
    rows = class1[list(space.evolvable)].to_numpy(dtype=float)
    times = class1["steadiness_time"].to_numpy(dtype=float)

    scaler = StandardScaler.fit(rows)
    gmm = select_gmm_bic(scaler.transform(rows), max_components=max_components, seed=seed)
    return InitContext(
        space=space,
        scaler=scaler,
        gmm=gmm,
        best_rows=rows,
        best_times=times,
    )


def sample_population(
    ctx: InitContext,
    n_pop: int,
    density_rate: float = DEFAULT_DENSITY_RATE,
    seed: int = 0,
) -> np.ndarray:
    """Merge round(n_pop * Ic) density samples with the best historical rows.

    Density samples are drawn from the fitted mixture in scaled space,
    mapped back to native units, and clamped into the product's historical
    bounds. The remainder are the feasible rows with the smallest
    steadiness times, verbatim.
    """
    if not 0.0 <= density_rate <= 1.0:
        raise ValueError("density rate must lie in [0, 1]")
    n_density = int(round(n_pop * density_rate))
    n_best = n_pop - n_density
    if ctx.best_rows.shape[0] < n_pop:
        raise InsufficientDataError(
            f"product {ctx.space.product!r} has {ctx.best_rows.shape[0]} feasible "
            f"rows, fewer than n_pop={n_pop}"
        )
    parts = []
    if n_best:
        parts.append(ctx.best_rows[:n_best])
    if n_density:
        drawn = ctx.scaler.inverse_transform(sample_gmm(ctx.gmm, n_density, seed=seed))
        lo, hi = ctx.space.bounds
        parts.append(np.clip(drawn, lo, hi))
    return np.vstack(parts)


def get_n_samples(
    table: pd.DataFrame,
    product: str,
    n_pop: int,
    density_rate: float = DEFAULT_DENSITY_RATE,
    seed: int = 0,
) -> np.ndarray:
    """One-shot convenience: build the context, then sample the population."""
    schema = FeatureSchema.from_table(table)
    ctx = build_init_context(table, schema, product, seed=seed)
    return sample_population(ctx, n_pop, density_rate, seed=seed)
