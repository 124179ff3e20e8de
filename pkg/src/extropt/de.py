"""Differential evolution over surrogate models with multi-level penalties.

The engine evolves only the continuous decision coordinates of one product
(categorical context is frozen for the whole run), evaluates candidates
through the trained surrogates, and penalizes infeasible or physically
inconsistent configurations so that feasible fitness always dominates.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConsistencyError
from .features import DecisionSpace
from .scaling import StandardScaler
from .seeding import InitContext, sample_population
from .surrogates import SurrogatePair

STRATEGIES = ("rand_1", "current_to_rand_1")
INCONSISTENCY_OFFSET = 10.0


@dataclass(frozen=True)
class DEConfig:
    """Run parameters; defaults follow the best-performing combination."""

    n_pop: int = 100
    max_iter: int = 300
    mutation_factor: float = 0.7
    crossover_rate: float = 0.9
    strategy: str = "rand_1"
    density_rate: float = 0.25
    delta: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_pop < 4:
            raise ValueError("n_pop must be >= 4 (mutation needs three distinct others)")
        if self.mutation_factor <= 0:
            raise ValueError("mutation factor must be positive")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover rate must lie in [0, 1]")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")


def _distinct_indices(n: int, i: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(n - 1, size=3, replace=False)
    idx[idx >= i] += 1
    return idx


def mutate(P: np.ndarray, F: float, strategy: str, rng: np.random.Generator) -> np.ndarray:
    """Donor vectors; r1, r2, r3 are uniform, pairwise distinct and != i."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if n < 4:
        raise ValueError("mutation needs a population of at least 4")
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    V = np.empty_like(P)
    for i in range(n):
        r1, r2, r3 = _distinct_indices(n, i, rng)
        if strategy == "rand_1":
            V[i] = P[r1] + F * (P[r2] - P[r3])
        else:
            V[i] = P[i] + F * (P[r1] - P[i]) + F * (P[r2] - P[r3])
    return V


def crossover_binomial(
    P: np.ndarray,
    V: np.ndarray,
    Cr: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Binomial crossover with one forced donor coordinate per individual."""
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    if P.shape != V.shape:
        raise ValueError("population and donors must have the same shape")
    n, d = P.shape
    take_donor = rng.random((n, d)) < Cr
    j_rand = rng.integers(0, d, size=n)
    take_donor[np.arange(n), j_rand] = True
    return np.where(take_donor, V, P)


def check_ranges(U: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Clip every coordinate into its historical [min, max] box."""
    return np.clip(np.asarray(U, dtype=float), bounds[0], bounds[1])


def t_setpoint(X: np.ndarray, speed_accel: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Seconds to reach every used extruder's speed setpoint (max over ratios)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not speed_accel:
        raise ConsistencyError("no used extruder: t_setpoint undefined")
    ratios = np.empty((X.shape[0], len(speed_accel)))
    for j, (si, ai) in enumerate(speed_accel):
        accel = X[:, ai]
        if np.any(accel <= 0):
            raise ConsistencyError("zero acceleration on a used extruder")
        ratios[:, j] = X[:, si] / accel
    return ratios.max(axis=1)


@dataclass(frozen=True)
class PenaltyResult:
    fitness: np.ndarray
    class_penalized: np.ndarray
    consistent: np.ndarray


def multi_level_penalty(
    classes: np.ndarray,
    y_hat: np.ndarray,
    t_set: np.ndarray,
    delta: float,
) -> PenaltyResult:
    """Penalize by predicted class, then enforce setpoint-time consistency.

    Feasible predictions pass through; class g in {2, 3} is scaled by
    5 * (g+1)^(g+1) (135x and 1280x), and any individual whose setpoint
    time is not below (1 + delta) times its penalized value is replaced by
    t_setpoint + 10 seconds.
    """
    g = np.asarray(classes, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    factor = np.where(g == 1.0, 1.0, 5.0 * (g + 1.0) ** (g + 1.0))
    y_prime = factor * y_hat
    consistent = t_set < (1.0 + delta) * y_prime
    fitness = np.where(consistent, y_prime, t_set + INCONSISTENCY_OFFSET)
    return PenaltyResult(fitness=fitness, class_penalized=y_prime, consistent=consistent)


@dataclass
class FitnessResult:
    fitness: np.ndarray
    raw: np.ndarray
    class_penalized: np.ndarray
    classes: np.ndarray
    t_setpoint: np.ndarray
    consistent: np.ndarray

    def take(self, mask: np.ndarray, other: "FitnessResult") -> "FitnessResult":
        """Row-wise merge: rows where mask is True come from ``other``."""
        pick = lambda a, b: np.where(mask, b, a)
        return FitnessResult(
            fitness=pick(self.fitness, other.fitness),
            raw=pick(self.raw, other.raw),
            class_penalized=pick(self.class_penalized, other.class_penalized),
            classes=pick(self.classes, other.classes),
            t_setpoint=pick(self.t_setpoint, other.t_setpoint),
            consistent=pick(self.consistent, other.consistent),
        )


def fitness(
    P: np.ndarray,
    space: DecisionSpace,
    surrogates: SurrogatePair,
    delta: float,
) -> FitnessResult:
    """Penalized fitness of a population of decision vectors."""
    X = space.assemble(P)
    raw = surrogates.objective.predict(X)
    classes = surrogates.constraint.predict(X).astype(np.int64)
    t_set = t_setpoint(X, space.speed_accel)
    pen = multi_level_penalty(classes, raw, t_set, delta)
    return FitnessResult(
        fitness=pen.fitness,
        raw=raw,
        class_penalized=pen.class_penalized,
        classes=classes,
        t_setpoint=t_set,
        consistent=pen.consistent,
    )


def select_greedy(
    P: np.ndarray,
    U: np.ndarray,
    f_P: np.ndarray,
    f_U: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep the better of parent and trial; the parent survives ties."""
    better = f_U < f_P
    P_next = np.where(better[:, None], U, P)
    return P_next, np.where(better, f_U, f_P), better


def dispersion(P: np.ndarray, scaler: StandardScaler) -> float:
    """Population spread: mean per-feature standard deviation in scaled space."""
    Z = scaler.transform(np.asarray(P, dtype=float))
    if Z.shape[0] < 2:
        raise ValueError("dispersion needs at least two individuals")
    return float(np.mean(Z.std(axis=0)))


@dataclass
class IterationStats:
    """Per-iteration evaluation summary of the current population."""

    raw_min: float
    raw_max: float
    feasible_max_raw: float | None
    infeasible_min_penalized: float | None
    n_class: dict
    n_inconsistent: int

    @classmethod
    def of(cls, res: FitnessResult) -> "IterationStats":
        feas = res.classes == 1
        return cls(
            raw_min=float(res.raw.min()),
            raw_max=float(res.raw.max()),
            feasible_max_raw=float(res.raw[feas].max()) if feas.any() else None,
            infeasible_min_penalized=(
                float(res.class_penalized[~feas].min()) if (~feas).any() else None
            ),
            n_class={int(c): int(n) for c, n in zip(*np.unique(res.classes, return_counts=True))},
            n_inconsistent=int((~res.consistent).sum()),
        )

    def to_dict(self) -> dict:
        return {
            "raw_min": self.raw_min,
            "raw_max": self.raw_max,
            "feasible_max_raw": self.feasible_max_raw,
            "infeasible_min_penalized": self.infeasible_min_penalized,
            "n_class": self.n_class,
            "n_inconsistent": self.n_inconsistent,
        }


@dataclass
class RunHistory:
    """Everything one seeded run produced, iteration by iteration."""

    product: str
    config: DEConfig
    evolvable: tuple[str, ...]
    best_fitness: list[float] = field(default_factory=list)
    best_vectors: list[np.ndarray] = field(default_factory=list)
    dispersion: list[float] = field(default_factory=list)
    stats: list[IterationStats] = field(default_factory=list)
    final_population: np.ndarray | None = None
    final_fitness: np.ndarray | None = None
    final_classes: np.ndarray | None = None
    final_consistent: np.ndarray | None = None

    @property
    def final_best(self) -> float:
        return self.best_fitness[-1]

    @property
    def final_feasible_best(self) -> float | None:
        """Best final fitness among fully feasible, consistent individuals."""
        ok = (self.final_classes == 1) & self.final_consistent
        return float(self.final_fitness[ok].min()) if ok.any() else None

    @property
    def seed_best(self) -> float:
        return self.best_fitness[0]

    @property
    def final_best_vector(self) -> np.ndarray:
        return self.best_vectors[-1]

    def to_dict(self) -> dict:
        return {
            "product": self.product,
            "config": asdict(self.config),
            "evolvable": list(self.evolvable),
            "best_fitness": [float(v) for v in self.best_fitness],
            "best_vectors": [v.tolist() for v in self.best_vectors],
            "dispersion": [float(v) for v in self.dispersion],
            "stats": [s.to_dict() for s in self.stats],
            "final_population": self.final_population.tolist(),
            "final_fitness": self.final_fitness.tolist(),
            "final_classes": self.final_classes.tolist(),
            "final_consistent": self.final_consistent.tolist(),
        }


def run(
    config: DEConfig,
    ctx: InitContext,
    surrogates: SurrogatePair,
) -> RunHistory:
    """Full optimization: seed, evaluate, then mutate/cross/clamp/select.

    Executes exactly ``config.max_iter`` iterations and is deterministic
    for a fixed context, configuration and seed.
    """
    rng = np.random.default_rng(config.seed)
    space = ctx.space
    P = sample_population(ctx, config.n_pop, config.density_rate, seed=config.seed)
    res = fitness(P, space, surrogates, config.delta)

    history = RunHistory(product=space.product, config=config, evolvable=space.evolvable)

    def record():
        best = int(np.argmin(res.fitness))
        history.best_fitness.append(float(res.fitness[best]))
        history.best_vectors.append(P[best].copy())
        history.dispersion.append(dispersion(P, ctx.scaler))
        history.stats.append(IterationStats.of(res))

    record()
    for _ in range(config.max_iter):
        V = mutate(P, config.mutation_factor, config.strategy, rng)
        U = crossover_binomial(P, V, config.crossover_rate, rng)
        U = check_ranges(U, space.bounds)
        res_U = fitness(U, space, surrogates, config.delta)
        better = res_U.fitness < res.fitness
        P = np.where(better[:, None], U, P)
        res = res.take(better, res_U)
        record()

    history.final_population = P
    history.final_fitness = res.fitness
    history.final_classes = res.classes
    history.final_consistent = res.consistent
    return history
