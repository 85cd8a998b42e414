"""Record service responses as JSON fixtures for the UI tests.

Trains the shipped BestS1 gradient-boosting model exactly as
`ckdscreen train --feature-set BestS1 --classifier GB --budget 50 --seed 42`
would, mounts it behind the in-process service, and saves the verbatim
response bodies the UI consumes.  Re-run after any service contract change:

    python3 scripts/record-fixtures.py

Every fixture is checked against the behavior the UI tests assert before it
is written, so a drifted service fails here, not in a stale-looking UI test.
"""
from __future__ import annotations

import json
import pathlib
import sys

from fastapi.testclient import TestClient

from ckdscreen.cohort import SyntheticSpec, encode_onehot, synthesize_cohort
from ckdscreen.models import train
from ckdscreen.schema import load_schema
from ckdscreen.selection import build_catalog
from ckdscreen.service import create_app
from ckdscreen.tuning import SearchBudget, derive_seed, tune

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "test" / "fixtures"

EXEMPLAR = {
    "Hypertension": "Yes",
    "Age": "60+y",
    "Diabetes": "No",
    "Anemia": "No",
    "BMI": "Normal",
    "RBC": "No",
    "Daily sleep<7h": "Yes",
    "Gender": "Female",
    "Family hypertension": "No",
}


def build_model():
    schema = load_schema()
    cohort = synthesize_cohort(schema, SyntheticSpec(n_positive=112, n_negative=172, seed=42))
    sub = encode_onehot(cohort).select(build_catalog(schema)["BestS1"])
    search = SearchBudget(n_trials=50, seed=derive_seed(42, "tune", "BestS1", "GB"))
    tuned = tune("GB", sub.values, sub.labels, search)
    return train(tuned.best, sub, feature_set_name="BestS1")


def save(name: str, payload: dict) -> None:
    path = FIXTURES / name
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {path.relative_to(FIXTURES.parent.parent)}")


def main() -> int:
    client = TestClient(create_app(build_model()))

    schema = client.get("/schema")
    assert schema.status_code == 200, schema.text
    assert len(schema.json()["features"]) == 9

    predicted = client.post("/predict", json=EXEMPLAR)
    assert predicted.status_code == 200, predicted.text
    base_prob = predicted.json()["probability"]
    assert predicted.json()["is_positive"], "exemplar must be a referral"

    explained = client.post("/explain", json=EXEMPLAR)
    assert explained.status_code == 200, explained.text
    assert explained.json()["probability"] == base_prob
    top2 = sorted(
        explained.json()["explanation"]["contributions"].items(),
        key=lambda kv: -abs(kv[1]),
    )[:2]
    assert {name for name, _ in top2} == {"Hypertension", "Age_60+y"}, top2
    assert all(v > 0 for _, v in top2), top2

    whatif = client.post("/predict", json={**EXEMPLAR, "Hypertension": "No"})
    assert whatif.status_code == 200, whatif.text
    assert whatif.json()["probability"] < base_prob

    missing = client.post("/predict", json={k: v for k, v in EXEMPLAR.items() if k != "Anemia"})
    assert missing.status_code == 422, missing.text
    assert missing.json()["detail"]["missing"] == ["Anemia"]

    bad_cat = client.post("/predict", json={**EXEMPLAR, "Age": "Ninety"})
    assert bad_cat.status_code == 422, bad_cat.text

    save("schema.json", schema.json())
    save("predict_exemplar.json", predicted.json())
    save("explain_exemplar.json", explained.json())
    save("predict_whatif_hypertension_no.json", whatif.json())
    save("error_missing_field.json", missing.json())
    save("error_bad_category.json", bad_cat.json())
    save("exemplar_patient.json", EXEMPLAR)
    return 0


if __name__ == "__main__":
    sys.exit(main())
