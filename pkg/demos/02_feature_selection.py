"""Rank features three ways and compare with the recorded consensus.

Ten methods ship (MWU filter, LASSO, RFECV under eight classifiers); this
demo runs the two cheap ones plus one RFECV on a synthetic cohort, then
replays the recorded rankings to show the set algebra that produced the
Common/Union/Best feature sets.
"""

from ckdscreen import SyntheticSpec, encode_onehot, load_schema, synthesize_cohort
from ckdscreen.cohort import column_names_for
from ckdscreen.selection import (
    aggregate,
    lasso_rank,
    load_preset_sets,
    load_reference_rankings,
    mwu_rank,
    rfecv_rank,
    scope_columns,
)

schema = load_schema()
cohort = synthesize_cohort(schema, SyntheticSpec(n_positive=112, n_negative=172, seed=42))
matrix = encode_onehot(cohort)

# S2 = everything except pathology tests (the cheap-to-collect scope)
s2 = matrix.select(scope_columns(schema, matrix, "S2"))

for ranking in (mwu_rank(s2), lasso_rank(s2), rfecv_rank(s2, "DT", scope="S2")):
    top = ", ".join(ranking.ordered_columns()[:5])
    print(f"{ranking.method_id:>9}: {top}")
print()

# the recorded rankings agree on a small core
ref = load_reference_rankings()
cols = column_names_for(schema)
_, common_s2 = aggregate([r for r in ref.values() if r.scope == "S2"], cols)
print("recorded Common(S2):", ", ".join(common_s2))

presets = load_preset_sets()
print("recorded BestS2    :", ", ".join(presets["BestS2"]))
print("recorded BestS1    :", ", ".join(presets["BestS1"]))
