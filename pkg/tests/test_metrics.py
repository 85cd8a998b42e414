"""Metric formulas are checked against independent oracles (sklearn on
reconstructed label vectors, trapezoid AUC) and frozen hand calculations."""

import numpy as np
import pytest
from scipy import stats
from sklearn.metrics import (
    balanced_accuracy_score,
    f1_score,
    precision_score,
    recall_score,
    roc_auc_score,
)

from ckdscreen import metrics as M
from ckdscreen.errors import TrainingError


def _vectors_from_counts(c: M.ConfusionCounts):
    y_true = np.array([1] * c.tp + [1] * c.fn + [0] * c.tn + [0] * c.fp)
    y_pred = np.array([1] * c.tp + [0] * c.fn + [0] * c.tn + [1] * c.fp)
    return y_true, y_pred


def test_confusion_from_vectors():
    y_true = np.array([1, 1, 0, 0, 1, 0])
    y_pred = np.array([1, 0, 0, 1, 1, 0])
    c = M.confusion(y_true, y_pred)
    assert (c.tp, c.fn, c.tn, c.fp) == (2, 1, 2, 1)
    with pytest.raises(TrainingError):
        M.confusion(np.array([1, 2]), np.array([0, 1]))
    with pytest.raises(TrainingError):
        M.confusion(np.array([1, 0]), np.array([1]))


def test_metrics_match_sklearn_oracle():
    rng = np.random.default_rng(123)
    for _ in range(300):
        tp, fp, tn, fn = rng.integers(1, 200, size=4)
        c = M.ConfusionCounts(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))
        y_true, y_pred = _vectors_from_counts(c)
        assert abs(M.balanced_accuracy(c) - balanced_accuracy_score(y_true, y_pred)) <= 1e-12
        assert abs(M.sensitivity(c) - recall_score(y_true, y_pred, pos_label=1)) <= 1e-12
        assert abs(M.f1_positive(c) - f1_score(y_true, y_pred, pos_label=1)) <= 1e-12
        assert abs(M.precision_macro(c) - precision_score(y_true, y_pred, average="macro")) <= 1e-12


def test_hand_checked_confusion():
    c = M.ConfusionCounts(tp=75, fn=37, tn=150, fp=22)
    assert round(M.balanced_accuracy(c), 4) == 0.7709
    assert round(M.sensitivity(c), 4) == 0.6696
    assert round(M.specificity(c), 4) == 0.8721


def test_auc_matches_trapezoid_oracle():
    rng = np.random.default_rng(99)
    for trial in range(50):
        n = int(rng.integers(10, 200))
        y = rng.integers(0, 2, size=n)
        if y.sum() in (0, n):
            y[0], y[1] = 0, 1
        # coarse grid forces ties, exercising the midrank path
        scores = rng.choice(np.linspace(0, 1, 7), size=n) if trial % 2 else rng.random(n)
        assert abs(M.auc_roc(y, scores) - roc_auc_score(y, scores)) <= 1e-9


def test_auc_requires_both_classes():
    with pytest.raises(TrainingError):
        M.auc_roc(np.ones(5), np.random.rand(5))


def test_zero_denominator_flags():
    c = M.ConfusionCounts(tp=0, fn=0, tn=5, fp=5)
    flags: list[str] = []
    assert M.sensitivity(c, flags) == 0.0
    assert any("sensitivity" in f for f in flags)
    vals, flags2 = M.compute_all(c)
    assert vals["sensitivity"] == 0.0 and vals["balanced_accuracy"] == 0.25
    assert flags2


def test_stratified_folds_counts():
    y = np.array([1] * 112 + [0] * 172)
    folds = M.stratified_folds(y, k=10, seed=42)
    assert len(folds) == 10
    seen = np.concatenate([te for _, te in folds])
    assert sorted(seen.tolist()) == list(range(284))  # exact partition
    for tr, te in folds:
        assert set(tr) & set(te) == set()
        pos = int(y[te].sum())
        assert pos in (11, 12)
        assert len(te) - pos in (17, 18)


def test_stratified_folds_deterministic():
    y = np.array([1] * 30 + [0] * 50)
    a = M.stratified_folds(y, k=5, seed=42)
    b = M.stratified_folds(y, k=5, seed=42)
    c = M.stratified_folds(y, k=5, seed=43)
    assert all(np.array_equal(x[1], z[1]) for x, z in zip(a, b))
    assert any(not np.array_equal(x[1], z[1]) for x, z in zip(a, c))


def test_stratified_folds_errors():
    with pytest.raises(TrainingError):
        M.stratified_folds(np.ones(20), k=5)
    with pytest.raises(TrainingError):
        M.stratified_folds(np.array([1] * 3 + [0] * 40), k=5)


def _fold(i, vals):
    c = M.ConfusionCounts(tp=1, fp=1, tn=1, fn=1)
    return M.FoldMetrics(fold=i, counts=c, values=vals)


def test_summarize_hand_case():
    folds = [_fold(0, {"balanced_accuracy": 0.8}), _fold(1, {"balanced_accuracy": 0.9})]
    s = M.summarize(folds)
    assert s.means["balanced_accuracy"] == pytest.approx(0.85)
    sd = np.std([0.8, 0.9], ddof=1)
    expected = stats.t.ppf(0.975, df=1) * sd / np.sqrt(2)
    assert s.half_widths["balanced_accuracy"] == pytest.approx(expected)
    assert s.half_widths["balanced_accuracy"] == pytest.approx(0.6353, abs=1e-4)


def test_summarize_degenerate_cases():
    s1 = M.summarize([_fold(0, {"m": 0.7})])
    assert s1.half_widths["m"] == 0.0
    s2 = M.summarize([_fold(i, {"m": 0.7}) for i in range(10)])
    assert s2.half_widths["m"] == 0.0
    normal = M.summarize([_fold(i, {"m": v}) for i, v in enumerate((0.6, 0.7, 0.8))], ci="normal")
    sd = np.std([0.6, 0.7, 0.8], ddof=1)
    assert normal.half_widths["m"] == pytest.approx(1.96 * sd / np.sqrt(3), abs=1e-4)
    with pytest.raises(TrainingError):
        M.summarize([])
    with pytest.raises(TrainingError):
        M.summarize([_fold(0, {"m": 1.0})], ci="bootstrap")


def _summary(ba, sens=0.5, auc=0.5, f1=0.5):
    return M.MetricSummary(
        means={"balanced_accuracy": ba, "sensitivity": sens, "auc_roc": auc, "f1": f1},
        half_widths={"balanced_accuracy": 0, "sensitivity": 0, "auc_roc": 0, "f1": 0},
        k=10,
    )


def test_select_best_lexicographic():
    rows = {
        "a": _summary(0.90, sens=0.80),
        "b": _summary(0.90, sens=0.85),
        "c": _summary(0.89, sens=0.99),
    }
    assert M.select_best(rows) == "b"
    # tie on all four -> first in declared order wins
    rows2 = {"x": _summary(0.9), "y": _summary(0.9)}
    assert M.select_best(rows2, order=["y", "x"]) == "y"
    # invariant to dict ordering once order= is pinned
    rows3 = dict(reversed(list(rows.items())))
    assert M.select_best(rows3, order=["a", "b", "c"]) == "b"
    with pytest.raises(TrainingError):
        M.select_best({})


def test_compare_significance_hand_case():
    p, stars = M.compare_significance([0.90, 0.92, 0.88], 0.76)
    # t = (0.90-0.76)/(0.02/sqrt(3)) = 12.124, df=2
    assert p == pytest.approx(0.00673, abs=2e-4)
    assert stars == "**"


def test_compare_significance_star_bands():
    rng = np.random.default_rng(5)
    vals = rng.normal(0.9, 0.01, size=10)
    p, stars = M.compare_significance(vals, 0.5)
    assert p < 0.001 and stars == "***"
    p2, stars2 = M.compare_significance([0.8, 0.9, 0.7, 0.85], 0.80)
    assert stars2 == "" and p2 > 0.05
    assert M.compare_significance([0.7, 0.7, 0.7], 0.7) == (1.0, "")
    p3, stars3 = M.compare_significance([0.7, 0.7, 0.7], 0.6)
    assert p3 == 0.0 and stars3 == "***"
    with pytest.raises(TrainingError):
        M.compare_significance([0.5], 0.4)


def test_cross_validate_loop():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(120, 4))
    y = (X[:, 0] + 0.2 * rng.normal(size=120) > 0).astype(int)

    def fit_predict(Xtr, ytr, Xte):
        from sklearn.linear_model import LogisticRegression

        clf = LogisticRegression().fit(Xtr, ytr)
        return clf.predict_proba(Xte)[:, 1], None

    folds = M.cross_validate(fit_predict, X, y, k=5, seed=42)
    assert len(folds) == 5
    for f in folds:
        assert set(f.values) == set(M.METRIC_NAMES)
        assert 0.5 <= f.values["auc_roc"] <= 1.0
    s = M.summarize(folds)
    assert s.means["balanced_accuracy"] > 0.8
