"""Explain individual predictions as base value + additive contributions.

Tree models get the exact polynomial-time decomposition; everything else
gets a seeded sampling estimator.  Either way the contributions telescope:
base + sum == the model's output for that patient, which is what makes the
numbers safe to put in front of a health worker.
"""

import numpy as np

from ckdscreen import SyntheticSpec, encode_onehot, load_schema, synthesize_cohort
from ckdscreen.cohort import encode_patient
from ckdscreen.explain import explain_global, explain_local
from ckdscreen.models import make_classifier, predict_proba, train
from ckdscreen.selection import build_catalog

schema = load_schema()
cohort = synthesize_cohort(schema, SyntheticSpec(n_positive=112, n_negative=172, seed=42))
matrix = encode_onehot(cohort)
columns = build_catalog(schema)["BestS1"]
model = train(make_classifier("GB", {"n_estimators": 120, "max_depth": 2}, seed=42),
              matrix.select(columns), feature_set_name="BestS1")

patient = {
    "Age": "60+y", "Gender": "Male", "Hypertension": "Yes", "Diabetes": "No",
    "Anemia": "No", "BMI": "Normal", "RBC": "No", "Daily sleep<7h": "No",
    "Family hypertension": "No",
}
x = encode_patient(schema, model.columns, patient)
prob = float(predict_proba(model, x[None, :])[0])

exp = explain_local(model, x, space="probability", seed=0)
print(f"risk for a 60+ hypertensive man: {prob:.3f}")
print(f"base value (average prediction): {exp.base_value:.3f}")
print()
print("contribution  column")
for col, value in sorted(exp.contributions.items(), key=lambda kv: -abs(kv[1])):
    bar = "#" * int(round(abs(value) * 60))
    print(f"{value:+11.3f}  {col:<22} {bar}")

gap = abs(exp.base_value + sum(exp.contributions.values()) - prob)
print(f"\nbase + contributions - probability = {gap:.2e}")

# and the global view: mean |contribution| over a sample of the cohort
imp = explain_global(model, matrix.select(columns).values[:60], seed=0)
print("\nglobal ordering:", ", ".join(imp.ordering[:4]), "...")
