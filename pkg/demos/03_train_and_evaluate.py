"""Tune a few classifiers on one feature set and report mean±CI rows.

The evaluation loop is the same one the full pipeline uses: sequential
model-based search inside each training split, then stratified 10-fold
cross-validation, then t-interval summaries per metric.
"""

from ckdscreen import SyntheticSpec, encode_onehot, load_schema, synthesize_cohort
from ckdscreen.metrics import METRIC_NAMES, cross_validate, select_best, summarize
from ckdscreen.models import fit_raw, proba_raw
from ckdscreen.selection import build_catalog
from ckdscreen.tuning import SearchBudget, derive_seed, tune

schema = load_schema()
cohort = synthesize_cohort(schema, SyntheticSpec(n_positive=112, n_negative=172, seed=42))
matrix = encode_onehot(cohort)
columns = build_catalog(schema)["BestS2"]
sub = matrix.select(columns)

print(f"feature set BestS2: {', '.join(columns)}")
print()
print("classifier\t" + "\t".join(METRIC_NAMES))

summaries = {}
for kind in ("LR", "DT", "GB"):
    budget = SearchBudget(n_trials=15, seed=derive_seed(42, "tune", "BestS2", kind))
    tuned = tune(kind, sub.values, sub.labels, budget, tune_folds=5)

    def fit_predict(Xtr, ytr, Xte, spec=tuned.best):
        return proba_raw(fit_raw(spec, Xtr, ytr), Xte), None

    folds = cross_validate(fit_predict, sub.values, sub.labels, k=10, seed=42)
    summaries[kind] = summarize(folds)
    row = summaries[kind].as_row()
    print(kind + "\t" + "\t".join(row[m] for m in METRIC_NAMES))

winner = select_best(summaries, order=["LR", "DT", "GB"])
print()
print(f"selected (balanced accuracy, ties broken by later metrics): {winner}")
