"""Cohort containers and transforms: load, impute, one-hot encode, synthesize.

A Cohort is an ordered set of fully-categorical rows validated against a
CohortSchema. encode_onehot keeps every category level as its own column
(binary features collapse to a single indicator column), which keeps the
encoded columns aligned with how screening features are reported and ranked.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from sklearn.experimental import enable_iterative_imputer  # noqa: F401
from sklearn.impute import IterativeImputer, SimpleImputer

from .errors import (
    CohortValidationError,
    ImputationError,
    MissingFeatureError,
    SchemaError,
    SchemaMismatchError,
)
from .schema import CohortSchema

LabelVector = tuple[str, ...]


@dataclass(frozen=True)
class Cohort:
    """Validated categorical rows + labels tied to a schema."""

    schema: CohortSchema
    rows: tuple[dict, ...]
    labels: LabelVector
    dataset_id: str = "primary"
    source: str = ""

    def __post_init__(self):
        if len(self.rows) != len(self.labels):
            raise CohortValidationError(
                f"{len(self.rows)} rows but {len(self.labels)} labels"
            )
        if not self.rows:
            raise CohortValidationError("cohort has no rows")
        valid_labels = {self.schema.positive_label, self.schema.negative_label}
        diagnostics: list[tuple[int, str, str]] = []
        for i, (row, lab) in enumerate(zip(self.rows, self.labels)):
            if lab not in valid_labels:
                diagnostics.append((i, self.schema.label_name, str(lab)))
            for spec in self.schema.features:
                if spec.name not in row:
                    diagnostics.append((i, spec.name, "<missing>"))
                elif row[spec.name] not in spec.categories:
                    diagnostics.append((i, spec.name, str(row[spec.name])))
        if diagnostics:
            head = "; ".join(f"row {r}: {f}={v!r}" for r, f, v in diagnostics[:5])
            raise CohortValidationError(
                f"{len(diagnostics)} invalid cells ({head}{'...' if len(diagnostics) > 5 else ''})",
                diagnostics,
            )

    def __len__(self) -> int:
        return len(self.rows)

    def class_counts(self) -> dict[str, int]:
        out = {self.schema.positive_label: 0, self.schema.negative_label: 0}
        for lab in self.labels:
            out[lab] += 1
        return out

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(list(self.rows), columns=list(self.schema.feature_names))
        df[self.schema.label_name] = list(self.labels)
        return df


@dataclass(frozen=True)
class EncodedMatrix:
    """One-hot design matrix with named columns and a 0/1 label vector."""

    column_names: tuple[str, ...]
    values: np.ndarray  # (n, d) float64 of 0/1
    labels: np.ndarray  # (n,) int, positive class = 1
    schema_hash: str
    feature_of_column: dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.values.shape != (len(self.labels), len(self.column_names)):
            raise SchemaError("encoded matrix shape mismatch")

    @property
    def n(self) -> int:
        return len(self.labels)

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise SchemaError(f"unknown column {name!r}") from None

    def select(self, columns: list[str] | tuple[str, ...]) -> "EncodedMatrix":
        idx = [self.column_index(c) for c in columns]
        return EncodedMatrix(
            column_names=tuple(columns),
            values=self.values[:, idx].copy(),
            labels=self.labels.copy(),
            schema_hash=self.schema_hash,
            feature_of_column={c: self.feature_of_column.get(c, c) for c in columns},
        )

    def data_digest(self) -> str:
        h = hashlib.sha256()
        h.update(",".join(self.column_names).encode())
        h.update(np.ascontiguousarray(self.values).tobytes())
        h.update(np.ascontiguousarray(self.labels.astype(np.int64)).tobytes())
        return h.hexdigest()


def column_names_for(schema: CohortSchema) -> tuple[str, ...]:
    """Encoded column names in schema order.

    Categorical feature -> one column per category, named "<feature>_<category>";
    binary feature -> a single column named after the feature (flags
    categories[0], e.g. Gender flags Female).
    """
    cols: list[str] = []
    for spec in schema.features:
        if spec.kind == "binary":
            cols.append(spec.name)
        else:
            cols.extend(f"{spec.name}_{c}" for c in spec.categories)
    return tuple(cols)


def encode_onehot(cohort: Cohort) -> EncodedMatrix:
    schema = cohort.schema
    cols = column_names_for(schema)
    col_idx = {c: j for j, c in enumerate(cols)}
    feature_of_column: dict[str, str] = {}
    X = np.zeros((len(cohort), len(cols)), dtype=np.float64)
    for spec in schema.features:
        if spec.kind == "binary":
            feature_of_column[spec.name] = spec.name
        else:
            for c in spec.categories:
                feature_of_column[f"{spec.name}_{c}"] = spec.name
    for i, row in enumerate(cohort.rows):
        for spec in schema.features:
            v = row[spec.name]
            if spec.kind == "binary":
                X[i, col_idx[spec.name]] = 1.0 if v == spec.indicator_category else 0.0
            else:
                X[i, col_idx[f"{spec.name}_{v}"]] = 1.0
    y = np.fromiter(
        (1 if lab == schema.positive_label else 0 for lab in cohort.labels),
        dtype=np.int64,
        count=len(cohort),
    )
    return EncodedMatrix(
        column_names=cols,
        values=X,
        labels=y,
        schema_hash=schema.schema_hash,
        feature_of_column=feature_of_column,
    )


def encode_patient(
    schema: CohortSchema, columns: tuple[str, ...], patient: dict
) -> np.ndarray:
    """Encode one feature->category map against a model's column subset.

    Only the features underlying `columns` are required; other schema
    features may appear and are validated but not used.  None/"" count as
    absent.  Field names travel in the raised errors so callers (the
    prediction service in particular) can name the offending input.
    """
    provided = {k: v for k, v in patient.items() if v not in (None, "")}
    unknown = sorted(set(provided) - {f.name for f in schema.features})
    if unknown:
        raise CohortValidationError(f"unknown feature(s): {', '.join(unknown)}")
    bad = [
        (name, value)
        for name, value in provided.items()
        if value not in schema.get(name).categories
    ]
    if bad:
        raise CohortValidationError(
            "; ".join(
                f"{name}: {value!r} is not one of {list(schema.get(name).categories)}"
                for name, value in sorted(bad)
            ),
            diagnostics=[(0, name, str(value)) for name, value in sorted(bad)],
        )

    flag_of: dict[str, tuple[str, str]] = {}  # column -> (feature, flagged category)
    for spec in schema.features:
        if spec.kind == "binary":
            flag_of[spec.name] = (spec.name, spec.indicator_category)
        else:
            for c in spec.categories:
                flag_of[f"{spec.name}_{c}"] = (spec.name, c)
    try:
        pairs = [flag_of[c] for c in columns]
    except KeyError as exc:
        raise SchemaMismatchError(f"column {exc.args[0]!r} is not derivable from the schema")

    needed = list(dict.fromkeys(feat for feat, _ in pairs))
    missing = [f for f in needed if f not in provided]
    if missing:
        raise MissingFeatureError(missing)
    return np.fromiter(
        (1.0 if provided[feat] == cat else 0.0 for feat, cat in pairs),
        dtype=np.float64,
        count=len(pairs),
    )


def encode_row(schema: CohortSchema, row: dict) -> tuple[tuple[str, ...], np.ndarray]:
    """One-hot encode a single feature->category mapping (no label)."""
    missing = [f.name for f in schema.features if f.name not in row]
    bad = [
        (f.name, row[f.name])
        for f in schema.features
        if f.name in row and row[f.name] not in f.categories
    ]
    if missing or bad:
        parts = [f"missing {m}" for m in missing] + [f"{n}={v!r} invalid" for n, v in bad]
        raise CohortValidationError("; ".join(parts))
    cols = column_names_for(schema)
    x = np.zeros(len(cols), dtype=np.float64)
    j = 0
    for spec in schema.features:
        if spec.kind == "binary":
            x[j] = 1.0 if row[spec.name] == spec.indicator_category else 0.0
            j += 1
        else:
            for c in spec.categories:
                if row[spec.name] == c:
                    x[j] = 1.0
                j += 1
    return cols, x


def load_cohort(
    path: str,
    schema: CohortSchema,
    column_map: Optional[dict[str, str]] = None,
    dataset_id: str = "primary",
    delimiter: str = ",",
) -> Cohort:
    """Read a delimited text file of categorical rows into a validated Cohort.

    column_map renames file columns to schema names before validation.
    """
    try:
        df = pd.read_csv(path, delimiter=delimiter, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise CohortValidationError(f"{path}: file is empty") from None
    if df.empty:
        raise CohortValidationError(f"{path}: no data rows")
    if column_map:
        df = df.rename(columns=column_map)
    if schema.label_name not in df.columns:
        raise CohortValidationError(f"{path}: label column {schema.label_name!r} not found")
    missing_cols = [f.name for f in schema.features if f.name not in df.columns]
    if missing_cols:
        raise CohortValidationError(f"{path}: missing feature columns {missing_cols}")
    rows = tuple(
        {f.name: df.iloc[i][f.name] for f in schema.features} for i in range(len(df))
    )
    labels = tuple(df[schema.label_name])
    return Cohort(schema=schema, rows=rows, labels=labels, dataset_id=dataset_id, source=path)


@dataclass(frozen=True)
class SyntheticSpec:
    """Sampling plan for a synthetic cohort.

    Category probabilities are drawn independently per feature within each
    class from the schema's class-conditional marginal counts.
    """

    n_positive: int
    n_negative: int
    seed: int = 42

    def __post_init__(self):
        if self.n_positive < 1 or self.n_negative < 1:
            raise SchemaError("synthetic cohort needs at least one row per class")


def synthesize_cohort(schema: CohortSchema, spec: SyntheticSpec) -> Cohort:
    if not schema.marginals:
        raise SchemaError("schema carries no marginal counts to sample from")
    rng = np.random.default_rng(spec.seed)
    rows: list[dict] = []
    labels: list[str] = []
    for cls, n in (
        (schema.positive_label, spec.n_positive),
        (schema.negative_label, spec.n_negative),
    ):
        cls_rows: list[dict] = [dict() for _ in range(n)]
        for feat in schema.features:
            counts = schema.marginals[feat.name][cls]
            cats = list(feat.categories)
            weights = np.array([counts.get(c, 0) for c in cats], dtype=np.float64)
            p = weights / weights.sum()
            draws = rng.choice(len(cats), size=n, p=p)
            for i, d in enumerate(draws):
                cls_rows[i][feat.name] = cats[d]
        rows.extend(cls_rows)
        labels.extend([cls] * n)
    return Cohort(
        schema=schema,
        rows=tuple(rows),
        labels=tuple(labels),
        dataset_id=f"synthetic-seed{spec.seed}",
        source=f"synthesize_cohort(n_positive={spec.n_positive}, n_negative={spec.n_negative}, seed={spec.seed})",
    )


def impute(
    df: pd.DataFrame,
    numeric_columns: Optional[list[str]] = None,
    seed: int = 42,
    max_iter: int = 10,
) -> pd.DataFrame:
    """Fill missing values: chained-equation regression for numeric columns,
    most-frequent category for the rest. Deterministic under a fixed seed.

    Raises ImputationError for any column with no observed values.
    """
    out = df.copy()
    if numeric_columns is None:
        numeric_columns = [c for c in df.columns if pd.api.types.is_numeric_dtype(df[c])]
    cat_columns = [c for c in df.columns if c not in numeric_columns]

    for c in df.columns:
        if df[c].isna().all():
            raise ImputationError(f"column {c!r} has no observed values")

    if numeric_columns:
        block = out[numeric_columns].astype(float)
        if block.isna().any().any():
            if len(numeric_columns) == 1:
                imp = SimpleImputer(strategy="mean")
                out[numeric_columns] = imp.fit_transform(block)
            else:
                imp = IterativeImputer(max_iter=max_iter, random_state=seed, sample_posterior=False)
                out[numeric_columns] = imp.fit_transform(block)
        else:
            out[numeric_columns] = block

    for c in cat_columns:
        col = out[c]
        mask = col.isna() | (col.astype(str).str.strip() == "")
        if mask.any():
            observed = col[~mask]
            # deterministic mode: most frequent, ties -> lexicographically first
            vc = observed.value_counts()
            top = vc[vc == vc.max()].index.min()
            out.loc[mask, c] = top
    return out
