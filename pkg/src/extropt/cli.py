"""Command-line interface: synth, ingest, train, optimize, experiment, report.

Every command is deterministic for a fixed seed. A key/value config file
(INI sections) can predefine any option; explicit flags always win.

Exit codes: 0 success, 2 validation error, 3 insufficient data,
4 model-artifact error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import pandas as pd

from . import __version__
from .de import DEConfig, run
from .errors import (
    ConsistencyError,
    CurationError,
    ExtroptError,
    InsufficientDataError,
    ModelArtifactError,
    SchemaError,
    TrainingError,
)
from .harness import ExperimentGrid, comparison_report, run_experiment, save_experiment
from .ingest import ingest_directory
from .plant import PlantSpec, generate_history
from .seeding import build_init_context
from .surrogates import SurrogatePair
from .training import (
    BOOSTING_GRID,
    FOREST_GRID,
    search_boosting_hyperparams,
    search_forest_hyperparams,
    train_surrogates,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INSUFFICIENT_DATA = 3
EXIT_MODEL_ARTIFACT = 4


class _Config:
    """INI-backed defaults; every flag given on the command line overrides."""

    def __init__(self, path: str | None):
        self.parser = configparser.ConfigParser()
        if path:
            if not Path(path).exists():
                raise CurationError(f"config file {path} does not exist")
            self.parser.read(path)

    def get(self, section: str, key: str, cast, fallback):
        if self.parser.has_option(section, key):
            return cast(self.parser.get(section, key))
        return fallback


def _resolve(flag_value, config: _Config, section: str, key: str, cast, default):
    if flag_value is not None:
        return flag_value
    return config.get(section, key, cast, default)


def _load_table(path) -> pd.DataFrame:
    if not Path(path).exists():
        raise CurationError(f"labeled table {path} does not exist")
    return pd.read_csv(path)


def cmd_synth(args, config: _Config) -> int:
    spec = PlantSpec(
        n_extrusions=_resolve(args.n, config, "synth", "n", int, 2000),
        noise_sigma=_resolve(args.noise, config, "synth", "noise", float, 0.1),
        seed=_resolve(args.seed, config, "synth", "seed", int, 0),
    )
    out = Path(args.out)
    record = generate_history(spec, out / "data", out / "truth" / "ground_truth.json")
    classes = [e["class"] for e in record["extrusions"]]
    print(f"generated {len(classes)} extrusions under {out / 'data'}")
    for c in (1, 2, 3):
        share = classes.count(c) / len(classes) if classes else 0.0
        print(f"  class {c}: {classes.count(c)} ({share:.1%})")
    print(f"ground truth written to {out / 'truth' / 'ground_truth.json'}")
    return EXIT_OK


def cmd_ingest(args, config: _Config) -> int:
    data = _resolve(args.data, config, "paths", "data", str, None)
    if data is None:
        raise CurationError("no data directory given (--data or config [paths] data)")
    table, diagnostics = ingest_directory(data)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False)
    sidecar = out.with_suffix(out.suffix + ".diagnostics.json")
    sidecar.write_text(json.dumps(diagnostics, indent=2))
    print(f"labeled {diagnostics['n_labeled']} extrusions -> {out}")
    print(f"class counts: {diagnostics['class_counts']}")
    return EXIT_OK


def cmd_train(args, config: _Config) -> int:
    table = _load_table(_resolve(args.data, config, "paths", "data", str, None))
    seed = _resolve(args.seed, config, "train", "seed", int, 0)
    forest_hp = None
    boosting_hp = None
    grid_trace = None
    if args.grid_search:
        from .features import FeatureSchema
        import numpy as np

        schema = FeatureSchema.from_table(table)
        X = schema.encode(table)
        y = table["feasibility_class"].to_numpy(dtype=np.int64)
        class1 = table[table["feasibility_class"] == 1]
        X1 = schema.encode(class1)
        y1 = class1["steadiness_time"].to_numpy(dtype=float)
        forest_hp, forest_trace = search_forest_hyperparams(X, y, FOREST_GRID, seed=seed)
        boosting_hp, boosting_trace = search_boosting_hyperparams(X1, y1, BOOSTING_GRID, seed=seed)
        grid_trace = {"classifier": forest_trace, "regressor": boosting_trace}
    result = train_surrogates(table, forest_hp, boosting_hp, seed=seed)
    out = Path(args.out)
    result.surrogates.save(out)
    report = dict(result.report)
    if grid_trace is not None:
        report["grid_search"] = grid_trace
    (out / "report.json").write_text(json.dumps(report, indent=2))
    print(f"models saved under {out}")
    print(f"cv macro-F1: {report['classifier']['cv_f1_mean']:.3f}")
    print(f"cv kendall tau: {report['regressor']['cv_kendall_mean']:.3f}")
    return EXIT_OK


def cmd_optimize(args, config: _Config) -> int:
    table = _load_table(_resolve(args.data, config, "paths", "data", str, None))
    models_dir = _resolve(args.models, config, "paths", "models", str, None)
    if models_dir is None:
        raise ModelArtifactError("no models directory given")
    surrogates = SurrogatePair.load(models_dir)
    de_config = DEConfig(
        n_pop=_resolve(args.n_pop, config, "de", "n_pop", int, 100),
        max_iter=_resolve(args.max_iter, config, "de", "max_iter", int, 300),
        mutation_factor=_resolve(args.F, config, "de", "f", float, 0.7),
        crossover_rate=_resolve(args.Cr, config, "de", "cr", float, 0.9),
        strategy=_resolve(args.strategy, config, "de", "strategy", str, "rand_1"),
        density_rate=_resolve(args.Ic, config, "de", "ic", float, 0.25),
        delta=_resolve(args.delta, config, "de", "delta", float, 0.5),
        seed=_resolve(args.seed, config, "de", "seed", int, 0),
    )
    ctx = build_init_context(table, surrogates.schema, args.product, seed=de_config.seed)
    history = run(de_config, ctx, surrogates)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_path = out / f"run_{args.product}_{de_config.seed}.json"
    run_path.write_text(json.dumps(history.to_dict(), indent=1))
    curve = pd.DataFrame(
        {
            "iteration": range(len(history.best_fitness)),
            "run_id": 0,
            "best_fitness": history.best_fitness,
        }
    )
    curve.to_csv(out / f"convergence_{args.product}_{de_config.seed}.csv", index=False)
    print(f"product {args.product}: seed best {history.seed_best:.3f} s "
          f"-> final best {history.final_best:.3f} s ({run_path})")
    return EXIT_OK


def cmd_experiment(args, config: _Config) -> int:
    table = _load_table(_resolve(args.data, config, "paths", "data", str, None))
    models_dir = _resolve(args.models, config, "paths", "models", str, None)
    if models_dir is None:
        raise ModelArtifactError("no models directory given")
    surrogates = SurrogatePair.load(models_dir)
    max_iters = args.max_iter or [config.get("experiment", "max_iter", int, 300)]
    grid = ExperimentGrid(
        repetitions=_resolve(args.reps, config, "experiment", "reps", int, 10),
        max_iters=tuple(max_iters),
        n_pop=_resolve(args.n_pop, config, "de", "n_pop", int, 100),
        density_rate=_resolve(args.Ic, config, "de", "ic", float, 0.25),
        delta=_resolve(args.delta, config, "de", "delta", float, 0.5),
        seed=_resolve(args.seed, config, "experiment", "seed", int, 0),
        products=tuple(args.product or ()),
    )
    jobs = _resolve(args.jobs, config, "experiment", "jobs", int, 1)
    results = run_experiment(grid, table, surrogates, jobs=jobs)
    save_experiment(results, args.out)
    n_failed = int((results.runs["status"] != "ok").sum())
    print(f"{len(results.runs)} runs ({n_failed} failed) -> {args.out}")
    return EXIT_OK


def cmd_report(args, config: _Config) -> int:
    table = _load_table(_resolve(args.data, config, "paths", "data", str, None))
    models_dir = _resolve(args.models, config, "paths", "models", str, None)
    if models_dir is None:
        raise ModelArtifactError("no models directory given")
    surrogates = SurrogatePair.load(models_dir)
    runs_path = Path(args.results) / "boxplot.csv"
    if not runs_path.exists():
        raise CurationError(f"no experiment results at {runs_path}")
    runs = pd.read_csv(runs_path)
    rows = comparison_report(table, surrogates, runs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(rows, indent=2))
    pd.DataFrame(rows).to_csv(out.with_suffix(".csv"), index=False)
    for r in rows:
        if r["status"] != "ok":
            print(f"product {r['product']}: {r['status']}", file=sys.stderr)
            continue
        print(
            f"product {r['product']}: baseline {r['baseline_s']:.2f} s, "
            f"best historical {r['best_historical_s']:.2f} s, "
            f"optimized {r['optimized_s']:.2f} s "
            f"({r['reduction_vs_baseline']:.0%} below baseline)"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extropt",
        description="Surrogate-based DE optimization of extrusion restart settings",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI config with defaults; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic plant corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="label raw signals into an extrusion table")
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the constraint and objective surrogates")
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-search", action="store_true", help="run the full CV grids (slow)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("optimize", help="run one seeded optimization")
    p.add_argument("--models")
    p.add_argument("--data")
    p.add_argument("--product", required=True)
    p.add_argument("--n-pop", type=int, dest="n_pop")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--F", type=float)
    p.add_argument("--Cr", type=float)
    p.add_argument("--strategy", choices=("rand_1", "current_to_rand_1"))
    p.add_argument("--Ic", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("experiment", help="run the 18-combination grid with repetitions")
    p.add_argument("--models")
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.add_argument("--reps", type=int)
    p.add_argument("--n-pop", type=int, dest="n_pop")
    p.add_argument("--max-iter", type=int, action="append", dest="max_iter")
    p.add_argument("--product", action="append")
    p.add_argument("--Ic", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="baseline / best-historical / optimized comparison")
    p.add_argument("--results", required=True, help="experiment output directory")
    p.add_argument("--data")
    p.add_argument("--models")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _Config(args.config)
        return args.func(args, config)
    except (CurationError, SchemaError, ConsistencyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InsufficientDataError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT_DATA
    except ModelArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_ARTIFACT
    except ExtroptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
