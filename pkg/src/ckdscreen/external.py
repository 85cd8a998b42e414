"""Harmonize three public CKD datasets to the primary schema and score models on them.

Each dataset has a versioned map (packaged under ``data/harmonization/``)
declaring column renames, category translations, unit conversions and the
constructed feature sets shared with the primary cohort.  Raw files live in
a local cache directory; :func:`fetch` fills it from the cited public URIs
and :func:`seed_standin_cache` writes deterministic stand-in files with the
documented class compositions for offline use.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import requests
import yaml

from .cohort import Cohort, EncodedMatrix, column_names_for, encode_onehot
from .errors import (
    CohortValidationError,
    DatasetUnavailableError,
    ImputationError,
    SchemaError,
    SchemaMismatchError,
)
from .metrics import METRIC_NAMES, auc_roc, compute_all, confusion
from .models import ModelSpec, TrainedModel, predict_proba, train
from .schema import CohortSchema, load_schema
from .tuning import derive_seed

DATASET_IDS = ("UCI2015", "UCI2023", "TH")
SET_NAMES = ("Common", "S1subset", "S2subset")
MISSING_TOKENS = {"", "?", "nan", "NaN", "NA", "n/a"}

_FETCH_HINT = (
    "run fetch({0!r}, cache_dir) with network access, seed the cache with "
    "seed_standin_cache(cache_dir), or place {1} in {2} yourself"
)


# ------------------------------------------------------------------ maps

@dataclass(frozen=True)
class FeatureMap:
    """How one raw column becomes one schema feature."""

    feature: str
    column: str
    value_map: Optional[dict] = None  # native value -> schema category
    numeric: bool = False             # discretize with the schema band rule
    unit_factor: float = 1.0          # applied before discretization
    missing: str = "mode"             # "mode" | "mean"


@dataclass(frozen=True)
class HarmonizationMap:
    dataset_id: str
    name: str
    citation: str
    url: str
    filename: str
    label_column: str
    label_map: dict
    class_counts: dict
    features: tuple[FeatureMap, ...]
    constructed_sets: dict  # set name -> tuple of encoded columns, or None
    set_notes: dict = field(default_factory=dict)
    excluded_columns: tuple[str, ...] = ()
    version: int = 1
    notes: str = ""

    @property
    def mapped_features(self) -> tuple[str, ...]:
        return tuple(fm.feature for fm in self.features)


def _validate_map(hmap: HarmonizationMap, schema: CohortSchema) -> None:
    names = set(schema.feature_names)
    for fm in hmap.features:
        spec = schema.get(fm.feature)
        if spec is None:
            raise SchemaError(f"{hmap.dataset_id}: {fm.feature!r} not in schema")
        if fm.numeric:
            if spec.discretization is None:
                raise SchemaError(
                    f"{hmap.dataset_id}: {fm.feature} mapped as numeric but has no band rule"
                )
            if fm.unit_factor <= 0:
                raise SchemaError(f"{hmap.dataset_id}: {fm.feature} unit factor must be > 0")
            needs_sex = spec.discretization.sex_breakpoints is not None
            if needs_sex and "Gender" not in {f.feature for f in hmap.features}:
                raise SchemaError(
                    f"{hmap.dataset_id}: {fm.feature} needs a sex column that is not mapped"
                )
        else:
            if not fm.value_map:
                raise SchemaError(f"{hmap.dataset_id}: {fm.feature} has no value map")
            bad = set(fm.value_map.values()) - set(spec.categories)
            if bad:
                raise SchemaError(
                    f"{hmap.dataset_id}: {fm.feature} maps onto unknown categories {sorted(bad)}"
                )
        if fm.missing not in ("mode", "mean"):
            raise SchemaError(f"{hmap.dataset_id}: bad missing policy {fm.missing!r}")
    unknown_labels = set(hmap.label_map.values()) - {
        schema.positive_label, schema.negative_label,
    }
    if unknown_labels:
        raise SchemaError(f"{hmap.dataset_id}: unknown labels {sorted(unknown_labels)}")
    available = set(column_names_for(_reduced_schema(hmap, schema)))
    for set_name, cols in hmap.constructed_sets.items():
        if cols is None:
            continue
        if not cols:
            raise SchemaError(f"{hmap.dataset_id}: constructed set {set_name} is empty")
        missing = [c for c in cols if c not in available]
        if missing:
            raise SchemaError(
                f"{hmap.dataset_id}: {set_name} needs columns the map cannot supply: {missing}"
            )
    assert names >= set(hmap.mapped_features)


def _map_from_doc(doc: dict) -> HarmonizationMap:
    features = tuple(
        FeatureMap(
            feature=f["feature"],
            column=f["column"],
            value_map=f.get("value_map"),
            numeric=bool(f.get("numeric", False)),
            unit_factor=float(f.get("unit_factor", 1.0)),
            missing=f.get("missing", "mode"),
        )
        for f in doc["features"]
    )
    sets = {
        name: (tuple(cols) if cols is not None else None)
        for name, cols in doc["constructed_sets"].items()
    }
    return HarmonizationMap(
        dataset_id=doc["dataset_id"],
        name=doc.get("name", doc["dataset_id"]),
        citation=doc["citation"],
        url=doc["url"],
        filename=doc["filename"],
        label_column=doc["label_column"],
        label_map=dict(doc["label_map"]),
        class_counts=dict(doc["class_counts"]),
        features=features,
        constructed_sets=sets,
        set_notes=dict(doc.get("set_notes", {})),
        excluded_columns=tuple(doc.get("excluded_columns", ())),
        version=int(doc.get("version", 1)),
        notes=doc.get("notes", ""),
    )


def load_harmonization(dataset_id: str, schema: Optional[CohortSchema] = None) -> HarmonizationMap:
    if dataset_id not in DATASET_IDS:
        raise SchemaError(f"unknown external dataset {dataset_id!r} (know {DATASET_IDS})")
    import importlib.resources as res

    text = (
        res.files("ckdscreen.data") / "harmonization" / f"{dataset_id.lower()}.yaml"
    ).read_text()
    hmap = _map_from_doc(yaml.safe_load(text))
    _validate_map(hmap, schema or load_schema())
    return hmap


def _reduced_schema(hmap: HarmonizationMap, schema: CohortSchema) -> CohortSchema:
    numeric = {fm.feature for fm in hmap.features if fm.numeric}
    kept = []
    for spec in schema.features:
        if spec.name not in set(hmap.mapped_features):
            continue
        if spec.name not in numeric and spec.discretization is not None:
            # arrives pre-categorized; the band rule (and any sex dependency
            # it drags in) does not apply to this source
            spec = replace(spec, discretization=None)
        kept.append(spec)
    return CohortSchema(
        features=tuple(kept),
        label_name=schema.label_name,
        positive_label=schema.positive_label,
        negative_label=schema.negative_label,
        schema_version=schema.schema_version,
    )


# ------------------------------------------------------------- harmonize

def _is_missing(value: str) -> bool:
    return value.strip() in MISSING_TOKENS


def _mode(values: list[str]) -> str:
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    # deterministic: highest count, then lexicographic
    return min(counts, key=lambda c: (-counts[c], c))


def _categorical_column(fm: FeatureMap, raw: pd.Series, dataset_id: str) -> list[str]:
    mapped: list[Optional[str]] = []
    bad: list[str] = []
    for v in raw:
        v = str(v).strip()
        if _is_missing(v):
            mapped.append(None)
        elif v in fm.value_map:
            mapped.append(fm.value_map[v])
        else:
            bad.append(v)
    if bad:
        raise CohortValidationError(
            f"{dataset_id}.{fm.column}: unmapped values {sorted(set(bad))[:5]}"
        )
    known = [v for v in mapped if v is not None]
    if not known:
        raise ImputationError(f"{dataset_id}.{fm.column}: every cell is missing")
    fill = _mode(known)
    return [v if v is not None else fill for v in mapped]


def _numeric_column(fm: FeatureMap, raw: pd.Series, dataset_id: str) -> np.ndarray:
    vals = pd.to_numeric(raw.astype(str).str.strip().replace(list(MISSING_TOKENS), np.nan),
                         errors="coerce").to_numpy(dtype=float)
    if np.isnan(vals).all():
        raise ImputationError(f"{dataset_id}.{fm.column}: every cell is missing")
    vals = vals * fm.unit_factor
    fill = float(np.nanmean(vals))
    return np.where(np.isnan(vals), fill, vals)


def harmonize(raw: pd.DataFrame, hmap: HarmonizationMap, schema: CohortSchema,
              source: str = "") -> Cohort:
    """Translate a raw external table into a Cohort over the mapped features."""
    present = [fm for fm in hmap.features if fm.column in raw.columns]
    if not present:
        raise SchemaMismatchError(
            f"{hmap.dataset_id}: no mapped column is present in the raw table"
        )
    absent = [fm.column for fm in hmap.features if fm.column not in raw.columns]
    if absent:
        raise CohortValidationError(
            f"{hmap.dataset_id}: raw table is missing mapped columns {absent}"
        )
    if hmap.label_column not in raw.columns:
        raise CohortValidationError(
            f"{hmap.dataset_id}: raw table has no {hmap.label_column!r} column"
        )

    n = len(raw)
    columns: dict[str, list[str]] = {}
    # categoricals first so sex-specific band rules can see Gender
    for fm in hmap.features:
        if not fm.numeric:
            columns[fm.feature] = _categorical_column(fm, raw[fm.column], hmap.dataset_id)
    for fm in hmap.features:
        if fm.numeric:
            vals = _numeric_column(fm, raw[fm.column], hmap.dataset_id)
            rule = schema.get(fm.feature).discretization
            sexes = columns.get("Gender", [None] * n)
            columns[fm.feature] = [
                rule.apply(v, sex=s) for v, s in zip(vals, sexes)
            ]

    labels = []
    bad_labels = []
    for v in raw[hmap.label_column]:
        v = str(v).strip()
        if v in hmap.label_map:
            labels.append(hmap.label_map[v])
        else:
            bad_labels.append(v)
    if bad_labels:
        raise CohortValidationError(
            f"{hmap.dataset_id}.{hmap.label_column}: unmapped labels "
            f"{sorted(set(bad_labels))[:5]}"
        )

    reduced = _reduced_schema(hmap, schema)
    rows = tuple(
        {name: columns[name][i] for name in reduced.feature_names} for i in range(n)
    )
    return Cohort(
        schema=reduced,
        rows=rows,
        labels=tuple(labels),
        dataset_id=hmap.dataset_id,
        source=source,
    )


# ------------------------------------------------------------- the cache

def _manifest_path(cache_dir) -> Path:
    return Path(cache_dir) / "manifest.json"


def _read_manifest(cache_dir) -> dict:
    path = _manifest_path(cache_dir)
    if not path.exists():
        return {"files": {}}
    return json.loads(path.read_text())


def _record_file(cache_dir, filename: str, source: str) -> None:
    digest = hashlib.sha256((Path(cache_dir) / filename).read_bytes()).hexdigest()
    manifest = _read_manifest(cache_dir)
    manifest["files"][filename] = {"sha256": digest, "source": source}
    _manifest_path(cache_dir).write_text(json.dumps(manifest, indent=2, sort_keys=True))


def cache_digests(cache_dir) -> dict[str, str]:
    """Filename -> sha256 for every dataset file the cache holds.

    This is what identifies the external data a run saw; the cache's
    location on disk is irrelevant.
    """
    return {
        name: entry["sha256"]
        for name, entry in sorted(_read_manifest(cache_dir)["files"].items())
    }


def _arff_to_frame(text: str) -> pd.DataFrame:
    """Minimal ARFF reader for the 2015 archive (nominal/numeric attributes only)."""
    names: list[str] = []
    rows: list[list[str]] = []
    in_data = False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        low = line.lower()
        if low.startswith("@attribute"):
            token = line.split(None, 2)[1]
            names.append(token.strip("'\""))
        elif low.startswith("@data"):
            in_data = True
        elif in_data:
            cells = [c.strip().strip("'\"") for c in line.split(",")]
            cells = ["" if c == "?" else c for c in cells]
            if len(cells) == len(names):
                rows.append(cells)
    if not names or not rows:
        raise DatasetUnavailableError("archive did not contain a readable ARFF table")
    return pd.DataFrame(rows, columns=names)


def fetch(dataset_id: str, cache_dir, timeout: float = 60.0) -> Path:
    """Download one dataset from its cited URI into the cache."""
    hmap = load_harmonization(dataset_id)
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    dest = cache / hmap.filename
    try:
        resp = requests.get(hmap.url, timeout=timeout)
        resp.raise_for_status()
        content = resp.content
        if hmap.url.endswith(".zip"):
            with zipfile.ZipFile(io.BytesIO(content)) as zf:
                member = next(
                    (m for m in zf.namelist() if m.endswith((".arff", ".csv"))), None
                )
                if member is None:
                    raise DatasetUnavailableError(f"no table inside {hmap.url}")
                payload = zf.read(member)
            if member.endswith(".arff"):
                frame = _arff_to_frame(payload.decode("utf-8", errors="replace"))
                frame.to_csv(dest, index=False)
            else:
                dest.write_bytes(payload)
        else:
            dest.write_bytes(content)
    except DatasetUnavailableError:
        raise
    except Exception as exc:
        raise DatasetUnavailableError(
            f"could not fetch {dataset_id} from {hmap.url}: {exc}; "
            + _FETCH_HINT.format(dataset_id, hmap.filename, cache)
        ) from exc
    _record_file(cache, hmap.filename, source=hmap.url)
    return dest


def load_external(dataset_id: str, cache_dir,
                  schema: Optional[CohortSchema] = None) -> Cohort:
    """Read one cached dataset and harmonize it to the primary schema."""
    schema = schema or load_schema()
    hmap = load_harmonization(dataset_id, schema)
    path = Path(cache_dir) / hmap.filename
    if not path.exists():
        raise DatasetUnavailableError(
            f"{dataset_id} is not cached; "
            + _FETCH_HINT.format(dataset_id, hmap.filename, Path(cache_dir))
        )
    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    entry = _read_manifest(cache_dir)["files"].get(hmap.filename, {})
    cohort = harmonize(raw, hmap, schema, source=entry.get("source", str(path)))
    got = cohort.class_counts()
    expected = {
        schema.positive_label: hmap.class_counts.get(schema.positive_label, 0),
        schema.negative_label: hmap.class_counts.get(schema.negative_label, 0),
    }
    if got != expected:
        raise CohortValidationError(
            f"{hmap.dataset_id}: class counts {got} do not match the recorded "
            f"composition {expected} — wrong or truncated file?"
        )
    return cohort


# ------------------------------------------------------ stand-in seeding

STANDIN_SEED = 617


def _yes_no(rng, n: int, p_yes: float) -> np.ndarray:
    return np.where(rng.random(n) < p_yes, "yes", "no")


def _standin_uci2015(rng) -> pd.DataFrame:
    """400 rows shaped like the 2015 file (250 CKD / 150 non-CKD)."""
    def block(n, ckd):
        age = np.clip(rng.normal(55 if ckd else 46, 15 if ckd else 16, n), 18, 90)
        frame = pd.DataFrame({
            "age": np.round(age).astype(int).astype(str),
            "bp": (np.round(np.clip(rng.normal(80 if ckd else 72, 12 if ckd else 9, n), 50, 180) / 5) * 5).astype(int).astype(str),
            "sg": rng.choice(["1.005", "1.010", "1.015", "1.020", "1.025"],
                             n, p=[0.2, 0.3, 0.25, 0.15, 0.1] if ckd else [0.02, 0.08, 0.2, 0.4, 0.3]),
            "al": rng.choice(["0", "1", "2", "3", "4"],
                             n, p=[0.35, 0.2, 0.2, 0.15, 0.1] if ckd else [0.9, 0.07, 0.03, 0.0, 0.0]),
            "su": rng.choice(["0", "1", "2", "3"],
                             n, p=[0.75, 0.12, 0.08, 0.05] if ckd else [0.97, 0.02, 0.01, 0.0]),
            "rbc": np.where(rng.random(n) < (0.18 if ckd else 0.01), "abnormal", "normal"),
            "pc": np.where(rng.random(n) < (0.25 if ckd else 0.02), "abnormal", "normal"),
            "pcc": np.where(rng.random(n) < (0.12 if ckd else 0.01), "present", "notpresent"),
            "ba": np.where(rng.random(n) < (0.06 if ckd else 0.0), "present", "notpresent"),
            "bgr": np.round(np.clip(rng.normal(175 if ckd else 108, 80 if ckd else 18, n), 60, 500)).astype(int).astype(str),
            "bu": np.round(np.clip(rng.normal(72 if ckd else 33, 40 if ckd else 9, n), 10, 300)).astype(int).astype(str),
            "sc": np.char.mod("%.1f", np.clip(rng.normal(4.4 if ckd else 0.9, 3.0 if ckd else 0.2, n), 0.4, 25)),
            "sod": np.round(np.clip(rng.normal(133 if ckd else 141, 6 if ckd else 3, n), 110, 155)).astype(int).astype(str),
            "pot": np.char.mod("%.1f", np.clip(rng.normal(4.9 if ckd else 4.3, 1.2 if ckd else 0.5, n), 2.5, 9)),
            "hemo": np.char.mod("%.1f", np.clip(rng.normal(10.6 if ckd else 15.2, 2.0 if ckd else 1.2, n), 5, 18)),
            "pcv": np.round(np.clip(rng.normal(33 if ckd else 45, 6 if ckd else 4, n), 15, 55)).astype(int).astype(str),
            "wc": np.round(np.clip(rng.normal(8400 if ckd else 7600, 2500 if ckd else 1800, n), 3000, 20000), -2).astype(int).astype(str),
            "rc": np.char.mod("%.1f", np.clip(rng.normal(3.9 if ckd else 5.3, 0.8 if ckd else 0.5, n), 2, 7)),
            "htn": _yes_no(rng, n, 0.58 if ckd else 0.01),
            "dm": _yes_no(rng, n, 0.53 if ckd else 0.01),
            "cad": _yes_no(rng, n, 0.08 if ckd else 0.01),
            "appet": np.where(rng.random(n) < (0.2 if ckd else 0.01), "poor", "good"),
            "pe": _yes_no(rng, n, 0.18 if ckd else 0.01),
            "ane": _yes_no(rng, n, 0.24 if ckd else 0.0),
            "classification": ["ckd" if ckd else "notckd"] * n,
        })
        return frame

    frame = pd.concat([block(250, True), block(150, False)], ignore_index=True)
    # the real file is full of holes; blank out ~5% of age and more of rbc
    frame.loc[rng.random(len(frame)) < 0.05, "age"] = ""
    frame.loc[rng.random(len(frame)) < 0.12, "rbc"] = ""
    frame.insert(0, "id", np.arange(len(frame)).astype(str))
    return frame.iloc[rng.permutation(len(frame))].reset_index(drop=True)


def _standin_uci2023(rng) -> pd.DataFrame:
    """200 rows with pre-banded age (128 CKD / 72 non-CKD)."""
    bands = ["20-30", "31-39", "40-49", "50-59", "60+"]

    def block(n, ckd):
        return pd.DataFrame({
            "AgeCategory": rng.choice(
                bands, n,
                p=[0.04, 0.08, 0.18, 0.25, 0.45] if ckd else [0.18, 0.22, 0.26, 0.19, 0.15],
            ),
            "Hypertension": _yes_no(rng, n, 0.70 if ckd else 0.10),
            "DiabetesMellitus": _yes_no(rng, n, 0.45 if ckd else 0.10),
            "Anaemia": _yes_no(rng, n, 0.50 if ckd else 0.08),
            "RedBloodCells": np.where(rng.random(n) < (0.25 if ckd else 0.01),
                                      "abnormal", "normal"),
            "PedalEdema": _yes_no(rng, n, 0.25 if ckd else 0.05),
            "Appetite": np.where(rng.random(n) < (0.30 if ckd else 0.05), "poor", "good"),
            "Class": ["ckd" if ckd else "not_ckd"] * n,
        })

    frame = pd.concat([block(128, True), block(72, False)], ignore_index=True)
    return frame.iloc[rng.permutation(len(frame))].reset_index(drop=True)


def _standin_th(rng) -> pd.DataFrame:
    """56 confirmed cases; lipids in mmol/L, no usable negative class."""
    n = 56
    return pd.DataFrame({
        "age": np.round(np.clip(rng.normal(70, 9, n), 40, 90)).astype(int).astype(str),
        "sex": np.where(rng.random(n) < 0.40, "female", "male"),
        "bmi": np.char.mod("%.1f", np.clip(rng.normal(25.5, 4.2, n), 15, 40)),
        "hypertension": _yes_no(rng, n, 0.85),
        "diabetes": _yes_no(rng, n, 0.70),
        "heart_disease": _yes_no(rng, n, 0.30),
        "current_smoker": _yes_no(rng, n, 0.25),
        "total_cholesterol_mmol_l": np.char.mod("%.2f", np.clip(rng.normal(4.9, 1.1, n), 2.5, 9)),
        "triglycerides_mmol_l": np.char.mod("%.2f", np.clip(rng.normal(1.9, 0.8, n), 0.4, 6)),
        "diagnosis": ["ckd"] * n,
    })


def seed_standin_cache(cache_dir, seed: int = STANDIN_SEED) -> dict[str, Path]:
    """Write deterministic stand-in files for all three datasets.

    The files copy each source's native shape (column names, units, class
    composition, missingness) with class-conditional rates taken from the
    published descriptions, so the harmonization path can be exercised
    offline.  They are not the real data and reports carry their source.
    """
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    builders = {
        "UCI2015": _standin_uci2015,
        "UCI2023": _standin_uci2023,
        "TH": _standin_th,
    }
    out: dict[str, Path] = {}
    for dataset_id, build in builders.items():
        hmap = load_harmonization(dataset_id)
        rng = np.random.default_rng(derive_seed(seed, "standin", dataset_id))
        frame = build(rng)
        dest = cache / hmap.filename
        frame.to_csv(dest, index=False)
        _record_file(cache, hmap.filename, source="standin")
        out[dataset_id] = dest
    return out


# ------------------------------------------------------------ evaluation

def external_evaluate(model: TrainedModel, cohort: Cohort) -> dict:
    """Score a trained model on a harmonized cohort (Table-7-shaped report).

    Two-class cohorts get all five metrics; an all-positive cohort can only
    support sensitivity, so every other cell is null.
    """
    X = encode_onehot(cohort)
    missing = [c for c in model.columns if c not in X.column_names]
    if missing:
        raise SchemaMismatchError(
            f"{cohort.dataset_id} cannot supply model columns {missing}"
        )
    sub = X.select(model.columns)
    proba = predict_proba(model, sub.values)
    calls = (proba >= model.threshold).astype(int)
    y = np.array(
        [1 if lab == cohort.schema.positive_label else 0 for lab in cohort.labels]
    )
    counts = confusion(y, calls)
    single_class = bool(y.all() or not y.any())
    metrics: dict[str, Optional[float]] = {name: None for name in METRIC_NAMES}
    if single_class:
        if not y.all():
            raise CohortValidationError(
                f"{cohort.dataset_id}: single-class cohort must be all-positive"
            )
        metrics["sensitivity"] = counts.tp / (counts.tp + counts.fn)
    else:
        values, _flags = compute_all(counts)
        metrics.update(values)
        metrics["auc_roc"] = auc_roc(y, proba)
    return {
        "dataset": cohort.dataset_id,
        "source": cohort.source,
        "n": len(cohort),
        "class_counts": cohort.class_counts(),
        "single_class": single_class,
        "model": {
            "kind": model.spec.kind,
            "feature_set": model.feature_set_name,
            "columns": list(model.columns),
        },
        "counts": {"tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn},
        "metrics": metrics,
    }


def default_external_spec(seed: int = 42) -> ModelSpec:
    """Boosted trees behave well on small all-indicator matrices."""
    return ModelSpec(
        kind="GB",
        params={"n_estimators": 120, "learning_rate": 0.1, "max_depth": 2},
        seed=seed,
    )


def run_external_validation(
    matrix: EncodedMatrix,
    cache_dir,
    spec: Optional[ModelSpec] = None,
    datasets: tuple[str, ...] = DATASET_IDS,
    schema: Optional[CohortSchema] = None,
) -> list[dict]:
    """Train one model per constructed set and score it on each dataset.

    ``matrix`` is the encoded primary training cohort.  Sets a dataset
    cannot support are reported as skipped with the map's reason.
    """
    schema = schema or load_schema()
    spec = spec or default_external_spec()
    reports: list[dict] = []
    for dataset_id in datasets:
        hmap = load_harmonization(dataset_id, schema)
        cohort = load_external(dataset_id, cache_dir, schema)
        for set_name in SET_NAMES:
            cols = hmap.constructed_sets.get(set_name)
            if cols is None:
                reports.append({
                    "dataset": dataset_id,
                    "feature_set": set_name,
                    "skipped": hmap.set_notes.get(set_name, "not constructible"),
                })
                continue
            model = train(spec, matrix.select(cols), feature_set_name=set_name)
            report = external_evaluate(model, cohort)
            report["feature_set"] = set_name
            reports.append(report)
    return reports
