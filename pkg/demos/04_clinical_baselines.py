"""Score the five published screening tools on a cohort.

Each tool ships as a checksummed data table (points or logistic
coefficients transcribed from its publication).  Inputs the cohort cannot
supply score zero and are reported, not silently dropped — that is exactly
how a printed questionnaire behaves when a box can't be filled in.
"""

from ckdscreen import SyntheticSpec, load_schema, synthesize_cohort
from ckdscreen.clinical import load_all_tools, evaluate_tool, score_clinical
from ckdscreen.metrics import METRIC_NAMES

schema = load_schema()
cohort = synthesize_cohort(schema, SyntheticSpec(n_positive=112, n_negative=172, seed=42))

print("tool\t" + "\t".join(METRIC_NAMES))
for tool_id, tool in load_all_tools().items():
    rep = evaluate_tool(tool, cohort)
    cells = [
        f"{rep['metrics'][m]:.4f}" if rep["metrics"].get(m) is not None else "null"
        for m in METRIC_NAMES
    ]
    print(tool_id + "\t" + "\t".join(cells))

# one patient, one tool, shown end to end
tools = load_all_tools()
patient = {
    "Age": "60+y", "Gender": "Female", "Hypertension": "Yes", "Diabetes": "No",
    "Heart disease": "No", "Anemia": "Yes",
}
res = score_clinical(tools["SCORED"], patient)
print()
print(f"SCORED for a 60+ hypertensive anemic woman: {res.raw_score} points "
      f"-> {'positive' if res.is_positive else 'negative'}")
print(f"items this schema cannot supply (scored 0): {', '.join(res.unavailable_inputs)}")
