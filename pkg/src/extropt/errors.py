"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: curation/validation problems exit 2,
insufficient data exits 3, model artifact problems exit 4.
"""


class ExtroptError(Exception):
    """Base class for all toolkit errors."""


class CurationError(ExtroptError):
    """Raw signal data cannot be curated (missing samples, bad files)."""


class InsufficientDataError(ExtroptError):
    """Not enough rows/samples/classes to carry out an operation."""


class SchemaError(ExtroptError):
    """Feature row does not match the schema a model was trained with."""


class TrainingError(ExtroptError):
    """Model training failed (degenerate targets, single-class data)."""


class FitError(ExtroptError):
    """Density estimation failed (singular covariance after regularization)."""


class ModelArtifactError(ExtroptError):
    """Persisted model artifact is missing, unreadable, or incompatible."""


class UndefinedCorrelationError(ExtroptError):
    """Correlation is undefined (an input is constant, all pairs tied)."""


class ConsistencyError(ExtroptError):
    """Physically inconsistent individual (zero acceleration on a used extruder)."""
