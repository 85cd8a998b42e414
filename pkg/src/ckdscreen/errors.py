"""Exception types shared across the package.

Everything raised on purpose derives from CkdScreenError so callers can
catch one base class at CLI/service boundaries.
"""


class CkdScreenError(Exception):
    """Base class for all deliberate errors."""


class SchemaError(CkdScreenError):
    """Malformed feature specification or discretization rule."""


class CohortValidationError(CkdScreenError):
    """Rows failed schema validation; carries row-level diagnostics."""

    def __init__(self, message: str, diagnostics: list[tuple[int, str, str]] | None = None):
        super().__init__(message)
        # (row index, feature name, offending value) triples
        self.diagnostics = diagnostics or []


class ImputationError(CkdScreenError):
    """Imputation cannot proceed (e.g. a column with no observed values)."""


class ParameterError(CkdScreenError):
    """Unknown classifier kind or out-of-range hyperparameter."""


class TrainingError(CkdScreenError):
    """Training input invalid (NaNs, shape mismatch, single-class folds...)."""


class SchemaMismatchError(CkdScreenError):
    """Model artifact and input disagree on the cohort schema digest."""


class MissingFeatureError(CkdScreenError):
    """A clinical tool or model requires features absent from the input."""

    def __init__(self, missing: list[str]):
        super().__init__(f"missing required features: {', '.join(sorted(missing))}")
        self.missing = list(missing)


class ToolTableError(CkdScreenError):
    """Clinical tool data file is malformed or fails its checksum."""


class DatasetUnavailableError(CkdScreenError):
    """External dataset not cached and not fetchable from here."""


class BundleError(CkdScreenError):
    """Results bundle is incomplete or inconsistent with its manifest."""
