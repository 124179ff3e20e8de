"""Surrogate-based optimization of extrusion restart settings.

Pipeline: raw multi-rate sensor streams are curated to a 1 Hz clock,
segmented into extrusions and labeled with a steadiness time and a
feasibility class; tree-ensemble surrogates learn the feasibility
constraint and the objective; a data-driven differential evolution engine
with multi-level penalty functions searches the historical decision box.
"""

from .boosting import BoostingHyperparams, ObjectiveBooster, predict_objective, train_objective_regressor
from .de import (
    DEConfig,
    RunHistory,
    check_ranges,
    crossover_binomial,
    dispersion,
    fitness,
    multi_level_penalty,
    mutate,
    run,
    select_greedy,
    t_setpoint,
)
from .errors import (
    ConsistencyError,
    CurationError,
    ExtroptError,
    FitError,
    InsufficientDataError,
    ModelArtifactError,
    SchemaError,
    TrainingError,
    UndefinedCorrelationError,
)
from .features import DecisionSpace, FeatureSchema, build_decision_space
from .forest import ConstraintForest, ForestHyperparams, predict_class, train_constraint_classifier
from .ingest import ingest_directory
from .labeling import (
    LabeledExtrusion,
    SearchPoint,
    classify_extrusion,
    compute_steadiness_time,
    extract_search_point,
    label_extrusions,
)
from .metrics import confusion_matrix, f1_score, kendall_tau, stratified_kfold
from .mixture import GaussianMixture, fit_gmm_em, sample_gmm, select_gmm_bic
from .plant import GroundTruth, PlantSpec, generate_history, true_optimum
from .resampling import smote_oversample, smote_tomek, tomek_undersample
from .scaling import StandardScaler
from .seeding import InitContext, build_init_context, get_n_samples, sample_population
from .signals import (
    ExtrusionSegment,
    RawSignal,
    SignalManifest,
    UniformFrame,
    resample_locf,
    segment_extrusions,
)
from .surrogates import SurrogatePair
from .training import TrainingResult, train_surrogates

__version__ = "0.1.0"
