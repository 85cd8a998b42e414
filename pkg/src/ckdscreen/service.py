"""HTTP prediction/explanation service.

One trained model per process, loaded and hash-verified at startup.  The
service is stateless: requests carry the whole patient, nothing is stored.
Bodies are parsed by hand because feature names ("Daily sleep<7h") are not
valid identifiers, so the payload is a plain JSON object mapping feature
names to category strings.
"""

from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, HTTPException, Request

from .cohort import encode_patient
from .errors import CkdScreenError, CohortValidationError, MissingFeatureError, SchemaMismatchError
from .explain import explain_local
from .models import TrainedModel, load_model, predict_proba
from .schema import CohortSchema, load_schema

EXPLAIN_SAMPLES = 512
EXPLAIN_SEED = 0


def load_artifact(path, schema: Optional[CohortSchema] = None) -> TrainedModel:
    """Load a model artifact, refusing any whose schema digest disagrees."""
    schema = schema or load_schema()
    model = load_model(path)
    if model.schema_hash != schema.schema_hash:
        raise SchemaMismatchError(
            f"artifact {path} was trained under schema {model.schema_hash[:12]}, "
            f"this package defines {schema.schema_hash[:12]}; refusing to serve"
        )
    return model


def _feature_payload(schema: CohortSchema, model: TrainedModel) -> list[dict]:
    """Feature specs for exactly the features the served model consumes."""
    needed = []
    for spec in schema.features:
        cols = (
            [spec.name]
            if spec.kind == "binary"
            else [f"{spec.name}_{c}" for c in spec.categories]
        )
        if any(c in model.columns for c in cols):
            needed.append(spec)
    return [
        {
            "name": spec.name,
            "kind": spec.kind,
            "group": spec.group,
            "categories": list(spec.categories),
            "description": spec.description,
        }
        for spec in needed
    ]


async def _read_patient(request: Request) -> dict:
    try:
        body = await request.json()
    except json.JSONDecodeError:
        raise HTTPException(status_code=400, detail="body is not valid JSON")
    if not isinstance(body, dict):
        raise HTTPException(
            status_code=400, detail="body must be a JSON object of feature: category"
        )
    return body


def _encode_or_422(schema: CohortSchema, model: TrainedModel, patient: dict):
    try:
        return encode_patient(schema, model.columns, patient)
    except MissingFeatureError as exc:
        raise HTTPException(
            status_code=422,
            detail={"error": str(exc), "missing": exc.missing},
        )
    except CohortValidationError as exc:
        raise HTTPException(
            status_code=422,
            detail={"error": str(exc), "fields": [d[1] for d in exc.diagnostics]},
        )


def _assessment(model: TrainedModel, probability: float) -> dict:
    return {
        "probability": probability,
        "is_positive": probability >= model.threshold,
        "threshold": model.threshold,
        "model": {"kind": model.spec.kind, "feature_set": model.feature_set_name},
    }


def create_app(model: TrainedModel, schema: Optional[CohortSchema] = None) -> FastAPI:
    schema = schema or load_schema()
    if model.schema_hash != schema.schema_hash:
        raise SchemaMismatchError(
            f"model schema {model.schema_hash[:12]} != package schema "
            f"{schema.schema_hash[:12]}; refusing to serve"
        )
    app = FastAPI(title="ckdscreen", docs_url=None, redoc_url=None)
    features = _feature_payload(schema, model)

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "model": {"kind": model.spec.kind, "feature_set": model.feature_set_name},
            "schema_hash": model.schema_hash,
        }

    @app.get("/schema")
    def served_schema() -> dict:
        return {
            "schema_hash": schema.schema_hash,
            "schema_version": schema.schema_version,
            "label_name": schema.label_name,
            "positive_label": schema.positive_label,
            "negative_label": schema.negative_label,
            "feature_set": model.feature_set_name,
            "threshold": model.threshold,
            "features": features,
        }

    @app.post("/predict")
    async def predict(request: Request) -> dict:
        patient = await _read_patient(request)
        x = _encode_or_422(schema, model, patient)
        prob = float(predict_proba(model, x[None, :], schema_hash=schema.schema_hash)[0])
        return _assessment(model, prob)

    @app.post("/explain")
    async def explain(request: Request) -> dict:
        patient = await _read_patient(request)
        x = _encode_or_422(schema, model, patient)
        prob = float(predict_proba(model, x[None, :], schema_hash=schema.schema_hash)[0])
        # probability space with a pinned seed: (base + sum contributions)
        # telescopes to the same number /predict returns, and identical
        # requests get byte-identical bodies
        exp = explain_local(
            model, x,
            space="probability",
            n_samples=EXPLAIN_SAMPLES,
            seed=EXPLAIN_SEED,
        )
        return {
            **_assessment(model, prob),
            "explanation": {
                "base_value": exp.base_value,
                "contributions": exp.contributions,
                "output_value": exp.output_value,
                "output_space": exp.output_space,
                "method": exp.method,
            },
        }

    @app.exception_handler(CkdScreenError)
    async def domain_error(request: Request, exc: CkdScreenError):
        # anything deliberate that slipped past the field validators is still
        # the caller's input, not a server fault
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": {"error": str(exc)}})

    return app


def serve_artifact(path, host: str, port: int, schema: Optional[CohortSchema] = None) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    app = create_app(load_artifact(path, schema), schema)
    uvicorn.run(app, host=host, port=port, log_level="warning")
