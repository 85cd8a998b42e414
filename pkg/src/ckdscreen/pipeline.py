"""End-to-end orchestration: preprocess, select, tune, evaluate, report.

A :class:`PipelineConfig` names the cohort source, the feature sets, the
classifiers and the budgets; :func:`run_pipeline` executes every
(feature set x classifier) pair and returns a :class:`ResultsBundle` whose
on-disk form is reproducible byte-for-byte from the manifest alone — no
timestamps, no environment-dependent ordering, every derived seed a pure
function of the config seed.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .clinical import evaluate_tool, load_all_tools
from .cohort import Cohort, EncodedMatrix, SyntheticSpec, encode_onehot, load_cohort, synthesize_cohort
from .errors import DatasetUnavailableError, ParameterError
from .external import DATASET_IDS, cache_digests, run_external_validation
from .metrics import (
    METRIC_NAMES,
    MetricSummary,
    compare_significance,
    cross_validate,
    select_best,
    summarize,
)
from .models import KIND_ORDER, REGISTRY, TrainedModel, fit_raw, make_classifier, proba_raw, save_model, train
from .schema import CohortSchema, load_schema
from .selection import build_catalog, run_all_methods
from .tuning import SearchBudget, derive_seed, tune

PRIVATE_COHORT_ENV = "CKDSCREEN_PRIVATE_COHORT"
STAGES = ("preprocess", "select", "tune", "evaluate", "report")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs; the digest of this is the run's identity."""

    dataset: str = "synthetic"  # "synthetic", "private", or a CSV path
    column_map: Optional[dict] = None
    n_positive: int = 112
    n_negative: int = 172
    feature_sets: tuple[str, ...] = ("All", "BestS1", "BestS2")
    classifiers: tuple[str, ...] = KIND_ORDER
    budget: int = 50
    sampler: str = "smbo"
    cv_k: int = 10
    tune_k: int = 5
    seed: int = 42
    ci: str = "t"
    threshold: float = 0.5
    rankings: bool = True
    sota: bool = True
    external_cache: Optional[str] = None
    output_dir: Optional[str] = None
    # serve settings
    bind_host: str = "127.0.0.1"
    bind_port: int = 8756
    model_artifact: Optional[str] = None

    # These change where a run reads and writes, never what it computes, so
    # they stay out of the run identity.  external data identity is carried
    # separately as file digests (see ResultsBundle.manifest).
    LOCATION_FIELDS = ("external_cache", "output_dir", "bind_host", "bind_port", "model_artifact")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["feature_sets"] = list(self.feature_sets)
        d["classifiers"] = list(self.classifiers)
        return d

    def semantic_dict(self) -> dict:
        d = self.to_dict()
        for key in self.LOCATION_FIELDS:
            d.pop(key)
        d["external"] = self.external_cache is not None
        return d

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.semantic_dict(), sort_keys=True).encode()
        ).hexdigest()


def config_from_dict(doc: dict) -> PipelineConfig:
    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    doc = dict(doc)
    for key in ("feature_sets", "classifiers"):
        if key in doc:
            doc[key] = tuple(doc[key])
    return PipelineConfig(**doc)


def validate_config(config: PipelineConfig, schema: CohortSchema) -> dict[str, tuple[str, ...]]:
    """Fail before any training on unknown names or nonsense numbers."""
    catalog = build_catalog(schema)
    missing = [s for s in config.feature_sets if s not in catalog]
    if missing:
        raise ParameterError(
            f"unknown feature sets {missing}; catalog has {sorted(catalog)}"
        )
    bad_kinds = [k for k in config.classifiers if k not in REGISTRY]
    if bad_kinds:
        raise ParameterError(f"unknown classifier kinds {bad_kinds}")
    if not config.feature_sets or not config.classifiers:
        raise ParameterError("need at least one feature set and one classifier")
    if config.budget < 1:
        raise ParameterError("budget must be >= 1")
    if config.cv_k < 2 or config.tune_k < 2:
        raise ParameterError("cv folds must be >= 2")
    if not 0.0 < config.threshold < 1.0:
        raise ParameterError("threshold must be inside (0, 1)")
    if config.sampler not in ("smbo", "random"):
        raise ParameterError(f"unknown sampler {config.sampler!r}")
    if config.ci not in ("t", "normal"):
        raise ParameterError(f"unknown ci method {config.ci!r}")
    return catalog


def resolve_cohort(config: PipelineConfig, schema: CohortSchema) -> Cohort:
    if config.dataset == "synthetic":
        return synthesize_cohort(
            schema,
            SyntheticSpec(
                n_positive=config.n_positive,
                n_negative=config.n_negative,
                seed=config.seed,
            ),
        )
    if config.dataset == "private":
        path = os.environ.get(PRIVATE_COHORT_ENV, "")
        if not path:
            raise DatasetUnavailableError(
                f"the private development cohort is not distributed with this "
                f"package; point {PRIVATE_COHORT_ENV} at a local copy to run "
                f"the exact-reproduction path"
            )
        if not Path(path).exists():
            raise DatasetUnavailableError(f"{PRIVATE_COHORT_ENV}={path} does not exist")
        return load_cohort(path, schema, column_map=config.column_map, dataset_id="private")
    return load_cohort(config.dataset, schema, column_map=config.column_map)


@dataclass
class ResultsBundle:
    """In-memory results plus a deterministic on-disk serialization."""

    config: PipelineConfig
    schema_hash: str
    rankings: dict  # scope -> list of per-method dicts (recorded-table shape)
    performance: dict  # set name -> {kind: row dict with summary + folds}
    best: dict  # set name -> {"kind", "params", "summary_row", ...}
    overall_best: str  # feature-set name of the best model overall
    sota: dict  # tool rows + model rows + stars
    external: list  # per dataset x constructed set reports
    models: dict = field(default_factory=dict)  # set name -> TrainedModel
    versions: dict = field(default_factory=dict)
    external_data: dict = field(default_factory=dict)  # filename -> sha256

    def manifest(self) -> dict:
        return {
            "config": self.config.semantic_dict(),
            "config_digest": self.config.digest(),
            "schema_hash": self.schema_hash,
            "seed": self.config.seed,
            "versions": self.versions,
            "external_data": dict(sorted(self.external_data.items())),
            "model_digests": {name: m.digest() for name, m in sorted(self.models.items())},
        }

    # ------------------------------------------------------------ writing

    def write(self, out_dir) -> dict:
        """Serialize every table, artifact and the manifest; returns the index."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files: dict[str, str] = {}

        def put_json(rel: str, obj) -> None:
            files[rel] = _write_text(out / rel, _json_dumps(obj))

        def put_tsv(rel: str, lines: list[str]) -> None:
            files[rel] = _write_text(out / rel, "\n".join(lines) + "\n")

        put_json("rankings.json", self.rankings)
        for scope, rows in sorted(self.rankings.items()):
            put_tsv(f"rankings_{scope.lower()}.tsv", _ranking_table(scope, rows))

        put_json("performance.json", self.performance)
        for set_name in self.config.feature_sets:
            put_tsv(
                f"performance_{_slug(set_name)}.tsv",
                _performance_table(set_name, self.performance[set_name]),
            )
        put_json("best_models.json", {
            "per_set": self.best,
            "overall_best": self.overall_best,
        })

        if self.sota:
            put_json("sota_comparison.json", self.sota)
            put_tsv("sota_comparison.tsv", _sota_table(self.sota))
        if self.external:
            put_json("external_reports.json", self.external)
            put_tsv("external_reports.tsv", _external_table(self.external))

        for set_name, model in sorted(self.models.items()):
            rel = f"models/{_slug(set_name)}.pkl"
            (out / "models").mkdir(exist_ok=True)
            save_model(model, out / rel)
            files[rel] = _sha256_file(out / rel)

        manifest = self.manifest()
        manifest["files"] = files
        _write_text(out / "manifest.json", _json_dumps(manifest))
        return manifest


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name)


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_text(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _fmt(x: Optional[float]) -> str:
    return "null" if x is None else f"{x:.4f}"


def _ranking_table(scope: str, rows: list[dict]) -> list[str]:
    lines = [f"# feature rankings, scope {scope} (rank 1 = most important)"]
    lines.append("method\tselected")
    for row in rows:
        ordered = ", ".join(e[0] for e in row["entries"])
        lines.append(f"{row['method']}\t{ordered}")
    return lines


def _performance_table(set_name: str, rows: dict) -> list[str]:
    lines = [f"# cross-validated performance, feature set {set_name} (mean±95% CI)"]
    lines.append("classifier\t" + "\t".join(METRIC_NAMES))
    for kind, row in rows.items():
        cells = [row["summary_row"][m] for m in METRIC_NAMES]
        lines.append(kind + "\t" + "\t".join(cells))
    return lines


def _sota_table(sota: dict) -> list[str]:
    lines = ["# screening tools vs the tuned models (point metrics; stars: "
             "two-sided t-test of the best model's folds against the tool)"]
    lines.append("row\t" + "\t".join(METRIC_NAMES))
    for row in sota["tools"]:
        cells = []
        for m in METRIC_NAMES:
            star = row["stars"].get(m, "")
            cells.append(_fmt(row["metrics"].get(m)) + star)
        lines.append(row["tool"] + "\t" + "\t".join(cells))
    for row in sota["models"]:
        cells = [row["summary_row"][m] for m in METRIC_NAMES]
        lines.append(f"{row['label']}\t" + "\t".join(cells))
    return lines


def _external_table(reports: list) -> list[str]:
    lines = ["# external validation (single-class sources report sensitivity only)"]
    lines.append("dataset\tfeature_set\tn\t" + "\t".join(METRIC_NAMES))
    for r in reports:
        if "skipped" in r:
            lines.append(f"{r['dataset']}\t{r['feature_set']}\tskipped: {r['skipped']}")
            continue
        cells = [_fmt(r["metrics"][m]) for m in METRIC_NAMES]
        lines.append(f"{r['dataset']}\t{r['feature_set']}\t{r['n']}\t" + "\t".join(cells))
    return lines


# ---------------------------------------------------------------- stages

class _stage:
    """Prefix any escaping error with the failing stage, keeping its type."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not str(exc).startswith("[stage:"):
            exc.args = (f"[stage: {self.name}] {exc}",)
        return False


def _evaluate_pair(
    matrix: EncodedMatrix,
    y: np.ndarray,
    set_name: str,
    columns: tuple[str, ...],
    kind: str,
    config: PipelineConfig,
) -> dict:
    sub = matrix.select(columns)
    budget = SearchBudget(
        n_trials=config.budget,
        sampler=config.sampler,
        seed=derive_seed(config.seed, "tune", set_name, kind),
    )
    tuned = tune(kind, sub.values, y, budget, tune_folds=config.tune_k)
    spec = tuned.best

    def fit_predict(Xtr, ytr, Xte):
        est = fit_raw(spec, Xtr, ytr)
        return proba_raw(est, Xte), None

    folds = cross_validate(
        fit_predict, sub.values, y,
        k=config.cv_k, seed=config.seed, threshold=config.threshold,
    )
    summary = summarize(folds, ci=config.ci)
    return {
        "kind": kind,
        "params": spec.params,
        "spec_seed": spec.seed,
        "tune_score": tuned.best_score,
        "summary_row": summary.as_row(),
        "means": summary.means,
        "half_widths": summary.half_widths,
        "fold_values": {m: [f.values[m] for f in folds] for m in METRIC_NAMES},
        "_summary": summary,
    }


def run_pipeline(config: PipelineConfig, schema: Optional[CohortSchema] = None) -> ResultsBundle:
    """Execute every (feature set x classifier) pair and collect the reports."""
    schema = schema or load_schema()
    catalog = validate_config(config, schema)

    with _stage("preprocess"):
        cohort = resolve_cohort(config, schema)
        matrix = encode_onehot(cohort)
        y = np.array(
            [1 if lab == schema.positive_label else 0 for lab in cohort.labels]
        )

    rankings: dict = {}
    if config.rankings:
        with _stage("select"):
            for scope in ("S1", "S2"):
                rows = run_all_methods(matrix, schema, scope, seed=config.seed)
                rankings[scope] = [
                    {
                        "method": r.method_id,
                        "entries": [[c, rank] for c, rank, _ in r.entries],
                    }
                    for r in rows
                ]

    performance: dict = {}
    best: dict = {}
    models: dict[str, TrainedModel] = {}
    with _stage("tune"):
        for set_name in config.feature_sets:
            columns = catalog[set_name]
            rows = {}
            for kind in config.classifiers:
                rows[kind] = _evaluate_pair(matrix, y, set_name, columns, kind, config)
            performance[set_name] = rows

    with _stage("evaluate"):
        summaries: dict[str, MetricSummary] = {}
        for set_name, rows in performance.items():
            per_kind = {kind: row.pop("_summary") for kind, row in rows.items()}
            winner = select_best(per_kind, order=list(config.classifiers))
            summaries[set_name] = per_kind[winner]
            spec = make_classifier(
                winner,
                params=performance[set_name][winner]["params"],
                seed=performance[set_name][winner]["spec_seed"],
            )
            sub = matrix.select(catalog[set_name])
            model = train(spec, sub, feature_set_name=set_name)
            models[set_name] = model
            best[set_name] = {
                "kind": winner,
                "params": spec.params,
                "summary_row": performance[set_name][winner]["summary_row"],
            }
        overall = select_best(summaries, order=list(config.feature_sets))

    sota: dict = {}
    if config.sota:
        with _stage("report"):
            best_folds = performance[overall][best[overall]["kind"]]["fold_values"]
            tool_rows = []
            for tool_id, tool in load_all_tools().items():
                rep = evaluate_tool(tool, cohort)
                stars = {}
                pvals = {}
                for m in METRIC_NAMES:
                    if m not in rep["metrics"]:
                        continue
                    p, code = compare_significance(best_folds[m], rep["metrics"][m])
                    pvals[m], stars[m] = p, code
                tool_rows.append({
                    "tool": tool_id,
                    "metrics": rep["metrics"],
                    "counts": rep["counts"],
                    "stars": stars,
                    "p_values": pvals,
                })
            model_rows = [
                {
                    "label": f"{best[s]['kind']} ({s})",
                    "feature_set": s,
                    "kind": best[s]["kind"],
                    "summary_row": best[s]["summary_row"],
                }
                for s in config.feature_sets
            ]
            sota = {
                "tools": tool_rows,
                "models": model_rows,
                "baseline_model": {"feature_set": overall, "kind": best[overall]["kind"]},
            }

    external: list = []
    external_data: dict = {}
    if config.external_cache:
        with _stage("report"):
            external = run_external_validation(
                matrix, config.external_cache, datasets=DATASET_IDS, schema=schema
            )
            external_data = cache_digests(config.external_cache)

    versions = _library_versions()
    bundle = ResultsBundle(
        config=config,
        schema_hash=schema.schema_hash,
        rankings=rankings,
        performance=performance,
        best=best,
        overall_best=overall,
        sota=sota,
        external=external,
        models=models,
        versions=versions,
        external_data=external_data,
    )
    if config.output_dir:
        bundle.write(config.output_dir)
    return bundle


def _library_versions() -> dict:
    import platform

    import numpy
    import scipy
    import sklearn

    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "sklearn": sklearn.__version__,
    }
