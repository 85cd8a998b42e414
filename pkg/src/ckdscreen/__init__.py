"""Community CKD screening toolkit.

Library surface: cohort schema + encoding, feature selection, classifier
benchmarking with budgeted hyperparameter search, established clinical-score
baselines, Shapley explanations, external-cohort validation, and a small
prediction service. See demos/ for narrative walkthroughs.
"""

__version__ = "0.1.0"

from .schema import CohortSchema, DiscretizationRule, FeatureSpec, load_schema, save_schema
from .cohort import (
    Cohort,
    EncodedMatrix,
    SyntheticSpec,
    encode_onehot,
    encode_row,
    impute,
    load_cohort,
    synthesize_cohort,
)

__all__ = [
    "CohortSchema",
    "DiscretizationRule",
    "FeatureSpec",
    "load_schema",
    "save_schema",
    "Cohort",
    "EncodedMatrix",
    "SyntheticSpec",
    "encode_onehot",
    "encode_row",
    "impute",
    "load_cohort",
    "synthesize_cohort",
    "__version__",
]
