"""Command-line surface.

Every subcommand is a thin wrapper over a library function; the CLI's own
job is argument parsing, config-file merging (file < flags), and turning
domain errors into distinct exit codes: 2 for invalid inputs/config, 3 for
environment/runtime failures (missing data, training blow-ups, IO).
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import pandas as pd
import yaml

from . import __version__
from .clinical import TOOL_IDS, evaluate_tool, load_all_tools, load_tool, score_clinical
from .cohort import Cohort, SyntheticSpec, encode_onehot, encode_patient, load_cohort, synthesize_cohort
from .errors import (
    CkdScreenError,
    CohortValidationError,
    DatasetUnavailableError,
    ImputationError,
    MissingFeatureError,
    ParameterError,
    SchemaError,
    SchemaMismatchError,
    ToolTableError,
    TrainingError,
)
from .explain import explain_local
from .external import DATASET_IDS, fetch, run_external_validation, seed_standin_cache
from .metrics import METRIC_NAMES, compute_all, confusion
from .models import KIND_ORDER, load_model, predict_proba, save_model, train
from .pipeline import (
    PipelineConfig,
    _external_table,
    _ranking_table,
    config_from_dict,
    run_pipeline,
)
from .schema import load_schema
from .selection import build_catalog, run_all_methods
from .service import serve_artifact
from .tuning import SearchBudget, derive_seed, tune

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

_VALIDATION = (
    ParameterError,
    SchemaError,
    CohortValidationError,
    SchemaMismatchError,
    MissingFeatureError,
    ToolTableError,
)
_RUNTIME = (DatasetUnavailableError, TrainingError, ImputationError, OSError)


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BrokenPipeError:  # downstream pager/head closed; not our error
            sys.exit(141)
        except _VALIDATION as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except _RUNTIME as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
        except CkdScreenError as exc:  # anything deliberate but uncategorized
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)

    return wrapper


def _load_doc(path: str) -> dict:
    text = Path(path).read_text()
    doc = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ParameterError(f"{path}: config must be a mapping")
    return doc


def _cohort_options(fn):
    fn = click.option(
        "--dataset",
        default="synthetic",
        show_default=True,
        help="'synthetic', 'private', or a cohort CSV path.",
    )(fn)
    fn = click.option("--n-positive", default=112, show_default=True, type=int)(fn)
    fn = click.option("--n-negative", default=172, show_default=True, type=int)(fn)
    fn = click.option("--seed", default=42, show_default=True, type=int)(fn)
    return fn


def _resolve(dataset: str, n_positive: int, n_negative: int, seed: int) -> Cohort:
    from .pipeline import resolve_cohort

    cfg = PipelineConfig(
        dataset=dataset, n_positive=n_positive, n_negative=n_negative, seed=seed
    )
    return resolve_cohort(cfg, load_schema())


def _cohort_frame(cohort: Cohort) -> pd.DataFrame:
    df = pd.DataFrame(list(cohort.rows))
    df[cohort.schema.label_name] = list(cohort.labels)
    return df


@click.group()
@click.version_option(__version__, prog_name="ckdscreen")
def main() -> None:
    """Early-stage CKD screening: training, evaluation, explanation, serving."""


# ------------------------------------------------------------------ data

@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--column-map", "column_map_path", type=click.Path(exists=True),
              help="YAML/JSON mapping of file columns to schema feature names.")
@click.option("--delimiter", default=",", show_default=True)
@click.option("--output", type=click.Path(), help="Write the validated cohort back out.")
@_exit_codes
def ingest(input_path, column_map_path, delimiter, output):
    """Validate a cohort CSV against the screening schema."""
    schema = load_schema()
    column_map = _load_doc(column_map_path) if column_map_path else None
    cohort = load_cohort(input_path, schema, column_map=column_map, delimiter=delimiter)
    labels = list(cohort.labels)
    pos = labels.count(schema.positive_label)
    click.echo(f"rows: {len(cohort)}")
    click.echo(f"{schema.positive_label}: {pos}")
    click.echo(f"{schema.negative_label}: {len(cohort) - pos}")
    if output:
        _cohort_frame(cohort).to_csv(output, index=False)
        click.echo(f"wrote {output}")


@main.command()
@click.option("--n-positive", default=112, show_default=True, type=int)
@click.option("--n-negative", default=172, show_default=True, type=int)
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--output", type=click.Path(), required=True)
@_exit_codes
def synthesize(n_positive, n_negative, seed, output):
    """Write a synthetic cohort CSV drawn from the schema's marginals."""
    schema = load_schema()
    cohort = synthesize_cohort(
        schema, SyntheticSpec(n_positive=n_positive, n_negative=n_negative, seed=seed)
    )
    _cohort_frame(cohort).to_csv(output, index=False)
    click.echo(f"wrote {output} ({len(cohort)} rows)")


# ------------------------------------------------------------- selection

@main.command("select-features")
@_cohort_options
@click.option("--scope", type=click.Choice(["S1", "S2", "both"]), default="both",
              show_default=True)
@click.option("--output-dir", type=click.Path(), help="Write TSV tables instead of stdout.")
@_exit_codes
def select_features(dataset, n_positive, n_negative, seed, scope, output_dir):
    """Rank features with all ten selection methods."""
    schema = load_schema()
    matrix = encode_onehot(_resolve(dataset, n_positive, n_negative, seed))
    scopes = ("S1", "S2") if scope == "both" else (scope,)
    for sc in scopes:
        rows = [
            {"method": r.method_id, "entries": [[c, rank] for c, rank, _ in r.entries]}
            for r in run_all_methods(matrix, schema, sc, seed=seed)
        ]
        lines = _ranking_table(sc, rows)
        if output_dir:
            path = Path(output_dir) / f"rankings_{sc.lower()}.tsv"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("\n".join(lines) + "\n")
            click.echo(f"wrote {path}")
        else:
            click.echo("\n".join(lines))


# -------------------------------------------------------------- training

@main.command("train")
@_cohort_options
@click.option("--feature-set", default="BestS2", show_default=True)
@click.option("--classifier", default="GB", show_default=True,
              type=click.Choice(list(KIND_ORDER)))
@click.option("--budget", default=50, show_default=True, type=int)
@click.option("--tune-k", default=5, show_default=True, type=int)
@click.option("--output", type=click.Path(), required=True, help="Model artifact path.")
@_exit_codes
def train_cmd(dataset, n_positive, n_negative, seed, feature_set, classifier,
              budget, tune_k, output):
    """Tune one classifier on one feature set and save the fitted model."""
    schema = load_schema()
    catalog = build_catalog(schema)
    if feature_set not in catalog:
        raise ParameterError(
            f"unknown feature set {feature_set!r}; catalog has {sorted(catalog)}"
        )
    matrix = encode_onehot(_resolve(dataset, n_positive, n_negative, seed))
    sub = matrix.select(catalog[feature_set])
    search = SearchBudget(
        n_trials=budget, seed=derive_seed(seed, "tune", feature_set, classifier)
    )
    tuned = tune(classifier, sub.values, sub.labels, search, tune_folds=tune_k)
    model = train(tuned.best, sub, feature_set_name=feature_set)
    save_model(model, output)
    click.echo(f"wrote {output}")
    click.echo(f"kind: {classifier}  feature set: {feature_set}")
    click.echo(f"tuning balanced accuracy: {tuned.best_score:.4f}")
    click.echo(f"params: {json.dumps(tuned.best.params, sort_keys=True)}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="YAML/JSON file of run settings; explicit flags win.")
@click.option("--dataset", default=None)
@click.option("--n-positive", default=None, type=int)
@click.option("--n-negative", default=None, type=int)
@click.option("--feature-set", "feature_sets", multiple=True,
              help="Repeatable; default All, BestS1, BestS2.")
@click.option("--classifier", "classifiers", multiple=True,
              help="Repeatable; default all twelve kinds.")
@click.option("--budget", default=None, type=int)
@click.option("--cv-k", default=None, type=int)
@click.option("--tune-k", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--threshold", default=None, type=float)
@click.option("--sampler", default=None, type=click.Choice(["smbo", "random"]))
@click.option("--ci", default=None, type=click.Choice(["t", "normal"]))
@click.option("--rankings/--no-rankings", default=None)
@click.option("--sota/--no-sota", default=None)
@click.option("--external-cache", default=None, envvar="CKDSCREEN_CACHE_DIR",
              help="Cache of external datasets; adds the external stage.")
@click.option("--output-dir", default=None, type=click.Path())
@_exit_codes
def evaluate(config_path, **flags):
    """Run the full pipeline and write the results bundle."""
    doc = _load_doc(config_path) if config_path else {}
    for key, value in flags.items():
        if value is None or value == ():
            continue  # not given; keep the file's (or the dataclass's) value
        doc[key] = list(value) if isinstance(value, tuple) else value
    cfg = config_from_dict(doc)
    bundle = run_pipeline(cfg)
    best = bundle.best[bundle.overall_best]
    click.echo(f"best model: {best['kind']} on {bundle.overall_best}")
    click.echo(f"balanced accuracy: {best['summary_row']['balanced_accuracy']}")
    if cfg.output_dir:
        click.echo(f"bundle: {cfg.output_dir}")
    else:
        click.echo("no --output-dir given; results not persisted")


# ------------------------------------------------------------- reporting

@main.command("compare-sota")
@_cohort_options
@click.option("--model", "model_path", type=click.Path(exists=True),
              help="Optional artifact to score on the same cohort.")
@_exit_codes
def compare_sota(dataset, n_positive, n_negative, seed, model_path):
    """Score the five published screening tools (and optionally a model)."""
    schema = load_schema()
    cohort = _resolve(dataset, n_positive, n_negative, seed)
    click.echo("row\t" + "\t".join(METRIC_NAMES))
    for tool_id, tool in load_all_tools().items():
        rep = evaluate_tool(tool, cohort)
        cells = [
            f"{rep['metrics'][m]:.4f}" if rep["metrics"].get(m) is not None else "null"
            for m in METRIC_NAMES
        ]
        click.echo(tool_id + "\t" + "\t".join(cells))
    if model_path:
        model = load_model(model_path)
        matrix = encode_onehot(cohort).select(model.columns)
        prob = predict_proba(model, matrix.values, schema_hash=schema.schema_hash)
        pred = (prob >= model.threshold).astype(int)
        counts = confusion(matrix.labels, pred)
        metrics, _ = compute_all(counts, matrix.labels, prob)
        cells = [f"{metrics[m]:.4f}" for m in METRIC_NAMES]
        click.echo(
            f"{model.spec.kind} ({model.feature_set_name})\t" + "\t".join(cells)
        )


@main.command("external-validate")
@_cohort_options
@click.option("--cache-dir", required=True, envvar="CKDSCREEN_CACHE_DIR",
              type=click.Path(), help="Where external dataset files live.")
@click.option("--fetch/--no-fetch", "do_fetch", default=False,
              help="Download missing datasets before validating.")
@click.option("--standin", is_flag=True,
              help="Seed the cache with deterministic stand-in data (offline use).")
@click.option("--output-dir", type=click.Path(), help="Also write JSON/TSV reports.")
@_exit_codes
def external_validate(dataset, n_positive, n_negative, seed, cache_dir, do_fetch,
                      standin, output_dir):
    """Harmonize the external cohorts and score freshly trained models on them."""
    if standin:
        seed_standin_cache(cache_dir)
        click.echo(f"seeded stand-in cache at {cache_dir}", err=True)
    elif do_fetch:
        for dataset_id in DATASET_IDS:
            fetch(dataset_id, cache_dir)
    matrix = encode_onehot(_resolve(dataset, n_positive, n_negative, seed))
    reports = run_external_validation(matrix, cache_dir)
    lines = _external_table(reports)
    click.echo("\n".join(lines))
    if output_dir:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "external_reports.json").write_text(
            json.dumps(reports, indent=2, sort_keys=True) + "\n"
        )
        (out / "external_reports.tsv").write_text("\n".join(lines) + "\n")
        click.echo(f"wrote {out}/external_reports.{{json,tsv}}", err=True)


# ----------------------------------------------------------- explanation

@main.command("explain")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--patient", "patient_file", type=click.File("r"), default="-",
              show_default=True, help="JSON object of feature: category ('-' = stdin).")
@click.option("--as-json", is_flag=True, help="Machine-readable output.")
@_exit_codes
def explain_cmd(model_path, patient_file, as_json):
    """Explain one prediction as base value + per-column contributions."""
    schema = load_schema()
    model = load_model(model_path)
    if model.schema_hash != schema.schema_hash:
        raise SchemaMismatchError(
            f"artifact was trained under a different schema ({model.schema_hash[:12]})"
        )
    try:
        patient = json.load(patient_file)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"patient is not valid JSON: {exc}")
    if not isinstance(patient, dict):
        raise ParameterError("patient must be a JSON object of feature: category")
    x = encode_patient(schema, model.columns, patient)
    prob = float(predict_proba(model, x[None, :], schema_hash=schema.schema_hash)[0])
    exp = explain_local(model, x, space="probability", seed=0)
    if as_json:
        click.echo(json.dumps({
            "probability": prob,
            "is_positive": prob >= model.threshold,
            "threshold": model.threshold,
            "base_value": exp.base_value,
            "contributions": exp.contributions,
            "method": exp.method,
        }, indent=2, sort_keys=True))
        return
    label = schema.positive_label if prob >= model.threshold else schema.negative_label
    click.echo(f"probability: {prob:.4f} -> {label} (threshold {model.threshold})")
    click.echo(f"base value: {exp.base_value:.4f}")
    click.echo("column\tcontribution")
    ranked = sorted(exp.contributions.items(), key=lambda kv: -abs(kv[1]))
    for col, value in ranked:
        click.echo(f"{col}\t{value:+.4f}")


@main.command("score")
@click.option("--tool", type=click.Choice(list(TOOL_IDS)), required=True)
@click.option("--patient", "patient_file", type=click.File("r"), default="-",
              show_default=True)
@_exit_codes
def score_cmd(tool, patient_file):
    """Run one published screening tool on one patient."""
    try:
        patient = json.load(patient_file)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"patient is not valid JSON: {exc}")
    res = score_clinical(load_tool(tool), patient)
    click.echo(f"raw score: {res.raw_score:g}")
    if res.category is not None:
        click.echo(f"category: {res.category}")
    click.echo(f"screen positive: {res.is_positive}")
    if res.unavailable_inputs:
        click.echo(f"unavailable inputs (scored 0): {', '.join(res.unavailable_inputs)}")


# --------------------------------------------------------------- serving

@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1", show_default=True,
              envvar="CKDSCREEN_BIND_HOST")
@click.option("--port", default=8756, show_default=True, type=int,
              envvar="CKDSCREEN_BIND_PORT")
@_exit_codes
def serve(model_path, host, port):
    """Serve /health, /schema, /predict and /explain for one model artifact."""
    click.echo(f"serving {model_path} on http://{host}:{port}", err=True)
    serve_artifact(model_path, host=host, port=port)


if __name__ == "__main__":
    main()
