"""Evaluation: confusion counts, screening metrics, stratified CV, comparisons.

All metric formulas are written out from their definitions so they can be
checked against independent oracles:

  sensitivity        = TP / (TP + FN)
  balanced accuracy  = (sensitivity + specificity) / 2
  F1 (positive)      = 2 * prec_pos * sens / (prec_pos + sens)
  precision (macro)  = (prec_pos + prec_neg) / 2
  AUC-ROC            = rank-sum (Mann-Whitney) formulation with midranks

Any metric whose denominator is zero evaluates to 0.0 and raises a warning
flag on the fold record instead of an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats
from sklearn.model_selection import StratifiedKFold

from .errors import TrainingError

METRIC_NAMES = ("balanced_accuracy", "sensitivity", "auc_roc", "f1", "precision_macro")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise TrainingError("confusion counts must be non-negative")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionCounts:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise TrainingError("y_true and y_pred length mismatch")
    bad = set(np.unique(y_true)) | set(np.unique(y_pred))
    if not bad <= {0, 1}:
        raise TrainingError(f"labels must be 0/1, got {sorted(bad)}")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: float, den: float, flags: Optional[list[str]], name: str) -> float:
    if den == 0:
        if flags is not None:
            flags.append(f"{name}: zero denominator")
        return 0.0
    return num / den


def sensitivity(c: ConfusionCounts, flags: Optional[list[str]] = None) -> float:
    return _ratio(c.tp, c.tp + c.fn, flags, "sensitivity")


def specificity(c: ConfusionCounts, flags: Optional[list[str]] = None) -> float:
    return _ratio(c.tn, c.tn + c.fp, flags, "specificity")


def balanced_accuracy(c: ConfusionCounts, flags: Optional[list[str]] = None) -> float:
    return (sensitivity(c, flags) + specificity(c, flags)) / 2.0


def precision_positive(c: ConfusionCounts, flags: Optional[list[str]] = None) -> float:
    return _ratio(c.tp, c.tp + c.fp, flags, "precision_positive")


def precision_negative(c: ConfusionCounts, flags: Optional[list[str]] = None) -> float:
    return _ratio(c.tn, c.tn + c.fn, flags, "precision_negative")


def precision_macro(c: ConfusionCounts, flags: Optional[list[str]] = None) -> float:
    return (precision_positive(c, flags) + precision_negative(c, flags)) / 2.0


def f1_positive(c: ConfusionCounts, flags: Optional[list[str]] = None) -> float:
    p = precision_positive(c, flags)
    s = sensitivity(c, flags)
    return _ratio(2.0 * p * s, p + s, flags, "f1")


def auc_roc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Probability a random positive outranks a random negative (ties count 1/2).

    Computed from midranks: AUC = (R1 - n1(n1+1)/2) / (n1*n0).
    """
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    n1 = int(np.sum(y_true == 1))
    n0 = int(np.sum(y_true == 0))
    if n1 == 0 or n0 == 0:
        raise TrainingError("AUC needs both classes present")
    ranks = stats.rankdata(scores)  # midranks
    r1 = float(np.sum(ranks[y_true == 1]))
    return (r1 - n1 * (n1 + 1) / 2.0) / (n1 * n0)


def compute_all(
    c: ConfusionCounts,
    y_true: Optional[np.ndarray] = None,
    scores: Optional[np.ndarray] = None,
) -> tuple[dict[str, float], list[str]]:
    flags: list[str] = []
    vals = {
        "balanced_accuracy": balanced_accuracy(c, flags),
        "sensitivity": sensitivity(c, flags),
        "f1": f1_positive(c, flags),
        "precision_macro": precision_macro(c, flags),
    }
    if y_true is not None and scores is not None:
        vals["auc_roc"] = auc_roc(y_true, scores)
    return vals, flags


def stratified_folds(
    y: np.ndarray, k: int = 10, seed: int = 42
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled stratified k-fold split, deterministic under the seed."""
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise TrainingError("stratified folds need both classes")
    if counts.min() < k:
        raise TrainingError(f"smallest class has {counts.min()} rows; cannot make {k} folds")
    # derived seeds can exceed the 32-bit range sklearn accepts
    skf = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed % 2**32)
    return [(tr, te) for tr, te in skf.split(np.zeros(len(y)), y)]


@dataclass
class FoldMetrics:
    fold: int
    counts: ConfusionCounts
    values: dict[str, float]
    flags: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class MetricSummary:
    """Per-metric mean and 95% CI half-width over fold values."""

    means: dict[str, float]
    half_widths: dict[str, float]
    k: int
    ci_method: str = "t"

    def as_row(self) -> dict[str, str]:
        return {
            m: f"{self.means[m]:.4f}±{self.half_widths[m]:.4f}" for m in self.means
        }


def summarize(folds: Sequence[FoldMetrics], ci: str = "t") -> MetricSummary:
    """Mean ± 95% half-width per metric.

    ci="t": Student-t with k-1 degrees of freedom (default);
    ci="normal": 1.96 * s / sqrt(k).
    """
    if not folds:
        raise TrainingError("no folds to summarize")
    if ci not in ("t", "normal"):
        raise TrainingError(f"unknown ci method {ci!r}")
    k = len(folds)
    names = list(folds[0].values.keys())
    means: dict[str, float] = {}
    hws: dict[str, float] = {}
    for m in names:
        vals = np.array([f.values[m] for f in folds], dtype=np.float64)
        means[m] = float(vals.mean())
        if k == 1:
            hws[m] = 0.0
            continue
        s = float(vals.std(ddof=1))
        q = float(stats.t.ppf(0.975, df=k - 1)) if ci == "t" else 1.959963984540054
        hws[m] = q * s / np.sqrt(k)
    return MetricSummary(means=means, half_widths=hws, k=k, ci_method=ci)


def select_best(
    rows: dict[str, MetricSummary], order: Optional[Sequence[str]] = None
) -> str:
    """Lexicographic argmax over mean (balanced accuracy, sensitivity, AUC, F1).

    `order` fixes the residual tie-break (first listed wins); by default the
    insertion order of `rows` is used. The result is invariant to reordering
    when `order` is supplied.
    """
    if not rows:
        raise TrainingError("select_best needs at least one row")
    names = list(order) if order is not None else list(rows.keys())
    names = [n for n in names if n in rows]
    key_metrics = ("balanced_accuracy", "sensitivity", "auc_roc", "f1")

    def key(name: str) -> tuple:
        s = rows[name]
        return tuple(s.means.get(m, float("-inf")) for m in key_metrics)

    best = names[0]
    for n in names[1:]:
        if key(n) > key(best):
            best = n
    return best


def compare_significance(fold_values: Sequence[float], baseline: float) -> tuple[float, str]:
    """Two-sided one-sample t-test of fold values against a fixed baseline.

    Returns (p_value, stars) with stars "***" p<0.001, "**" p<0.01,
    "*" p<0.05, "" otherwise. A zero-variance sample gives p=1.0 when the
    mean equals the baseline and p=0.0 otherwise.
    """
    vals = np.asarray(fold_values, dtype=np.float64)
    if len(vals) < 2:
        raise TrainingError("significance test needs at least 2 fold values")
    mean = float(vals.mean())
    sd = float(vals.std(ddof=1))
    if sd <= 1e-12 * max(1.0, abs(mean)):  # constant folds up to float noise
        p = 1.0 if abs(mean - baseline) <= 1e-9 else 0.0
    else:
        p = float(stats.ttest_1samp(vals, popmean=baseline).pvalue)
    if p < 0.001:
        stars = "***"
    elif p < 0.01:
        stars = "**"
    elif p < 0.05:
        stars = "*"
    else:
        stars = ""
    return p, stars


def cross_validate(
    fit_predict: Callable[[np.ndarray, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]],
    X: np.ndarray,
    y: np.ndarray,
    k: int = 10,
    seed: int = 42,
    threshold: float = 0.5,
) -> list[FoldMetrics]:
    """Generic stratified k-fold evaluation loop.

    fit_predict(X_train, y_train, X_test) must return (prob_positive, y_pred)
    for the test rows; y_pred may be None to apply the threshold here.
    """
    out: list[FoldMetrics] = []
    for i, (tr, te) in enumerate(stratified_folds(y, k=k, seed=seed)):
        prob, pred = fit_predict(X[tr], y[tr], X[te])
        if pred is None:
            pred = (np.asarray(prob) >= threshold).astype(int)
        c = confusion(y[te], pred)
        vals, flags = compute_all(c, y_true=y[te], scores=prob)
        out.append(FoldMetrics(fold=i, counts=c, values=vals, flags=flags))
    return out
