"""Train a model, save it, and exercise the prediction service in-process.

The HTTP surface is four endpoints: /health, /schema (feature specs for
the served set — the browser form is generated from this), /predict, and
/explain.  The same requests work against `ckdscreen serve --model ...`
over the network; here the app is driven through an in-process client so
the demo has no ports or lifecycles to manage.
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from ckdscreen import SyntheticSpec, encode_onehot, load_schema, synthesize_cohort
from ckdscreen.models import make_classifier, save_model, train
from ckdscreen.selection import build_catalog
from ckdscreen.service import create_app, load_artifact

schema = load_schema()
cohort = synthesize_cohort(schema, SyntheticSpec(n_positive=112, n_negative=172, seed=42))
matrix = encode_onehot(cohort)
model = train(make_classifier("GB", {"n_estimators": 120, "max_depth": 2}, seed=42),
              matrix.select(build_catalog(schema)["BestS2"]), feature_set_name="BestS2")

# artifacts round-trip through disk and are hash-checked on load
path = Path(tempfile.mkdtemp()) / "bests2.pkl"
save_model(model, path)
client = TestClient(create_app(load_artifact(path)))

served = client.get("/schema").json()
print(f"serving {served['feature_set']}; form fields: "
      f"{', '.join(f['name'] for f in served['features'])}")
print()

patient = {"Hypertension": "Yes", "Age": "60+y", "Anemia": "Yes",
           "Diabetes": "No", "Daily sleep<7h": "Yes"}
out = client.post("/predict", json=patient).json()
print(f"POST /predict -> {out['probability']:.4f} "
      f"({'refer' if out['is_positive'] else 'no referral'})")

exp = client.post("/explain", json=patient).json()["explanation"]
top = sorted(exp["contributions"].items(), key=lambda kv: -abs(kv[1]))[:3]
print("top contributions:", ", ".join(f"{c} {v:+.3f}" for c, v in top))

# validation errors carry the offending field, which the UI surfaces inline
bad = client.post("/predict", json=dict(patient, Hypertension="Maybe"))
print(f"\nbad category -> HTTP {bad.status_code}: {bad.json()['detail']['error']}")
missing = client.post("/predict", json={"Hypertension": "Yes"})
print(f"missing fields -> HTTP {missing.status_code}: {missing.json()['detail']['error']}")
