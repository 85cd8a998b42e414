"""Harmonize three public CKD datasets and score fresh models on them.

Each dataset carries a versioned mapping file: column renames, category
value maps, unit conversions, leakage exclusions, and the constructed
feature sets it can support.  Models are trained on the synthetic cohort
and evaluated across the schema boundary; the all-positive source reports
sensitivity only, with every other metric null, rather than pretending a
specificity exists.

No network access is needed: the cache is seeded with deterministic
stand-in data whose class compositions match the recorded originals.
"""

import tempfile

from ckdscreen import SyntheticSpec, encode_onehot, load_schema, synthesize_cohort
from ckdscreen.external import load_harmonization, run_external_validation, seed_standin_cache

schema = load_schema()
cohort = synthesize_cohort(schema, SyntheticSpec(n_positive=112, n_negative=172, seed=42))
matrix = encode_onehot(cohort)

hmap = load_harmonization("UCI2023")
print(f"UCI2023 mapping v{hmap.version}: {len(hmap.features)} features, "
      f"excluded: {', '.join(hmap.excluded_columns)}")
print()

cache = tempfile.mkdtemp(prefix="ckd-extcache-")
seed_standin_cache(cache)

print("dataset \tfeature set\tn\tsensitivity\tbalanced acc")
for rep in run_external_validation(matrix, cache):
    if "skipped" in rep:
        print(f"{rep['dataset']:<8}\t{rep['feature_set']}\tskipped: {rep['skipped']}")
        continue
    sens = rep["metrics"]["sensitivity"]
    ba = rep["metrics"]["balanced_accuracy"]
    ba_txt = f"{ba:.4f}" if ba is not None else "null"
    print(f"{rep['dataset']:<8}\t{rep['feature_set']}\t{rep['n']}\t{sens:.4f}\t{ba_txt}")
