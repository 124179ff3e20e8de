"""Experiment grid over mutation strategies and DE parameters, plus reporting.

The grid enumerates 18 fixed combinations (two mutation strategies times
three mutation factors times three crossover rates) with stable IDs, runs
every combination a configurable number of times per product, and writes
deterministic CSV artifacts: a per-ID summary table, flat convergence
curves, and per-run finals for boxplot rendering.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .de import DEConfig, run
from .errors import ExtroptError
from .features import FeatureSchema
from .seeding import InitContext, build_init_context
from .surrogates import SurrogatePair

MUTATION_FACTORS = (0.7, 0.8, 0.9)
CROSSOVER_RATES = (0.5, 0.7, 0.9)
STRATEGY_ORDER = ("current_to_rand_1", "rand_1")


@dataclass(frozen=True)
class Combo:
    combo_id: int
    strategy: str
    mutation_factor: float
    crossover_rate: float


def combo_table() -> tuple[Combo, ...]:
    """The 18 grid combinations with their stable identifiers."""
    combos = []
    i = 1
    for strategy in STRATEGY_ORDER:
        for cr in CROSSOVER_RATES:
            for f in MUTATION_FACTORS:
                combos.append(Combo(i, strategy, f, cr))
                i += 1
    return tuple(combos)


@dataclass(frozen=True)
class ExperimentGrid:
    repetitions: int = 10
    max_iters: tuple[int, ...] = (300,)
    n_pop: int = 100
    density_rate: float = 0.25
    delta: float = 0.5
    seed: int = 0
    products: tuple[str, ...] = ()


@dataclass
class ExperimentResults:
    runs: pd.DataFrame
    convergence: pd.DataFrame
    summary: pd.DataFrame


def _run_one(task) -> dict:
    product, combo, max_iter, rep, grid = task
    ctx = _WORKER_STATE["contexts"][product]
    surrogates = _WORKER_STATE["surrogates"]
    config = DEConfig(
        n_pop=grid.n_pop,
        max_iter=max_iter,
        mutation_factor=combo.mutation_factor,
        crossover_rate=combo.crossover_rate,
        strategy=combo.strategy,
        density_rate=grid.density_rate,
        delta=grid.delta,
        seed=grid.seed + rep,
    )
    record = {
        "product": product,
        "combo_id": combo.combo_id,
        "strategy": combo.strategy,
        "F": combo.mutation_factor,
        "Cr": combo.crossover_rate,
        "max_iter": max_iter,
        "rep": rep,
        "seed": config.seed,
    }
    try:
        history = run(config, ctx, surrogates)
    except ExtroptError as exc:
        record.update(
            status=f"error: {exc}",
            seed_best=np.nan,
            final_best=np.nan,
            final_feasible_best=np.nan,
            curve=[],
        )
        return record
    feasible = history.final_feasible_best
    record.update(
        status="ok",
        seed_best=history.seed_best,
        final_best=history.final_best,
        final_feasible_best=np.nan if feasible is None else feasible,
        curve=[float(v) for v in history.best_fitness],
    )
    return record


_WORKER_STATE: dict = {}


def _init_worker(contexts, surrogates):
    _WORKER_STATE["contexts"] = contexts
    _WORKER_STATE["surrogates"] = surrogates


def run_experiment(
    grid: ExperimentGrid,
    table: pd.DataFrame,
    surrogates: SurrogatePair,
    jobs: int = 1,
    contexts: dict[str, InitContext] | None = None,
) -> ExperimentResults:
    """Execute the whole grid; failures are recorded and do not stop it."""
    products = tuple(grid.products) or tuple(sorted(table["product"].astype(str).unique()))
    if contexts is None:
        contexts = {
            p: build_init_context(table, surrogates.schema, p, seed=grid.seed)
            for p in products
        }
    tasks = [
        (product, combo, max_iter, rep, grid)
        for product in products
        for combo in combo_table()
        for max_iter in grid.max_iters
        for rep in range(grid.repetitions)
    ]
    _init_worker(contexts, surrogates)
    if jobs > 1:
        with multiprocessing.Pool(
            jobs, initializer=_init_worker, initargs=(contexts, surrogates)
        ) as pool:
            records = pool.map(_run_one, tasks)
    else:
        records = [_run_one(t) for t in tasks]

    records.sort(key=lambda r: (r["product"], r["combo_id"], r["max_iter"], r["rep"]))
    run_ids = {
        (r["product"], r["combo_id"], r["max_iter"], r["rep"]): i
        for i, r in enumerate(records)
    }

    conv_rows = []
    for r in records:
        rid = run_ids[(r["product"], r["combo_id"], r["max_iter"], r["rep"])]
        for it, value in enumerate(r["curve"]):
            conv_rows.append(
                {
                    "run_id": rid,
                    "product": r["product"],
                    "combo_id": r["combo_id"],
                    "max_iter": r["max_iter"],
                    "rep": r["rep"],
                    "iteration": it,
                    "best_fitness": value,
                }
            )
    runs = pd.DataFrame([{k: v for k, v in r.items() if k != "curve"} for r in records])
    runs.insert(0, "run_id", [run_ids[(r["product"], r["combo_id"], r["max_iter"], r["rep"])] for r in records])
    convergence = pd.DataFrame(conv_rows)

    ok = runs[runs["status"] == "ok"]
    summary_rows = []
    for (product, combo_id, max_iter), g in ok.groupby(["product", "combo_id", "max_iter"]):
        finals = g["final_best"].to_numpy()
        q1, med, q3 = np.percentile(finals, [25, 50, 75])
        summary_rows.append(
            {
                "product": product,
                "combo_id": combo_id,
                "strategy": g["strategy"].iloc[0],
                "F": g["F"].iloc[0],
                "Cr": g["Cr"].iloc[0],
                "max_iter": max_iter,
                "n_runs": len(g),
                "min": float(finals.min()),
                "q1": float(q1),
                "median": float(med),
                "q3": float(q3),
                "iqr": float(q3 - q1),
            }
        )
    summary = pd.DataFrame(summary_rows).sort_values(
        ["product", "combo_id", "max_iter"], ignore_index=True
    )
    return ExperimentResults(runs=runs, convergence=convergence, summary=summary)


def save_experiment(results: ExperimentResults, out_dir) -> None:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results.summary.to_csv(out / "summary.csv", index=False)
    results.convergence.to_csv(out / "convergence.csv", index=False)
    results.runs.to_csv(out / "boxplot.csv", index=False)


def comparison_report(
    table: pd.DataFrame,
    surrogates: SurrogatePair,
    runs: pd.DataFrame,
) -> list[dict]:
    """Baseline vs best-historical vs optimized, per product.

    Baseline is the regressor's prediction at the product's typical
    configuration (class-1 medians of every decision variable, modal
    context); best-historical is the smallest observed steadiness time;
    optimized is the best fitness across the grid, with the feasible-only
    best reported alongside. Products without feasible history are skipped
    with a warning entry.
    """
    from .features import build_decision_space

    rows = []
    for product in sorted(table["product"].astype(str).unique()):
        sub = table[table["product"].astype(str) == product]
        class1 = sub[sub["feasibility_class"] == 1]
        if len(class1) == 0:
            rows.append({"product": product, "status": "skipped: no feasible history"})
            continue
        space = build_decision_space(table, surrogates.schema, product)
        baseline = float(surrogates.objective.predict(space.template[None, :])[0])
        best_hist = float(class1["steadiness_time"].min())
        g = runs[(runs["product"] == product) & (runs["status"] == "ok")]
        optimized = float(g["final_best"].min()) if len(g) else np.nan
        feas = g["final_feasible_best"].dropna()
        optimized_feasible = float(feas.min()) if len(feas) else np.nan
        rows.append(
            {
                "product": product,
                "status": "ok",
                "baseline_s": baseline,
                "best_historical_s": best_hist,
                "optimized_s": optimized,
                "optimized_feasible_s": optimized_feasible,
                "reduction_vs_baseline": 1.0 - optimized / baseline,
            }
        )
    return rows
