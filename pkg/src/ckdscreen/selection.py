"""Feature selection over encoded screening columns.

Ten methods share one output shape (FeatureRanking): a Mann-Whitney U filter,
an L1-logistic sweep, and recursive feature elimination with CV under eight
importance-bearing classifier kinds. Scope "S1" ranks every column, "S2"
excludes the pathology (lab) group so the selection reflects what a household
screening visit can collect.

The MWU p-value is computed by exact enumeration for n <= 20 (dynamic
programming over rank sums, midranks for ties) and by the tie-corrected
normal approximation otherwise. Selection keeps p < alpha (default 0.05),
ranked by ascending p, ties broken by absolute rank-biserial effect then
column order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np
import yaml
from scipy import stats
from sklearn.linear_model import LogisticRegression

from .cohort import EncodedMatrix
from .errors import ParameterError, TrainingError
from .metrics import balanced_accuracy, confusion, stratified_folds
from .schema import CohortSchema
from .models import REGISTRY, fit_raw, make_classifier, proba_raw

RFECV_KINDS = ("LR", "RF", "GB", "DT", "AB", "ET", "XGB", "CB")
METHOD_IDS = tuple(f"RFECV+{k}" for k in RFECV_KINDS) + ("MWU", "LASSO")
SCOPES = ("S1", "S2")
EXACT_MWU_MAX_N = 20


@dataclass(frozen=True)
class FeatureRanking:
    """Ordered selection produced by one method in one scope."""

    method_id: str
    scope: str
    entries: tuple[tuple[str, int, float], ...]  # (column, rank, score)
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ranks = [r for _, r, _ in self.entries]
        if ranks != list(range(1, len(ranks) + 1)):
            raise ParameterError(f"{self.method_id}/{self.scope}: ranks must be 1..k")
        names = [c for c, _, _ in self.entries]
        if len(set(names)) != len(names):
            raise ParameterError(f"{self.method_id}/{self.scope}: duplicate columns")

    @property
    def selected(self) -> frozenset[str]:
        return frozenset(c for c, _, _ in self.entries)

    def ordered_columns(self) -> tuple[str, ...]:
        return tuple(c for c, _, _ in self.entries)


def scope_columns(schema: CohortSchema, matrix: EncodedMatrix, scope: str) -> list[str]:
    if scope == "S1":
        return list(matrix.column_names)
    if scope == "S2":
        return [
            c
            for c in matrix.column_names
            if schema.get(matrix.feature_of_column.get(c, c)).group != "Path"
        ]
    raise ParameterError(f"unknown scope {scope!r} (use S1 or S2)")


# ---------------------------------------------------------------- MWU filter

def _exact_mwu_pvalue(values: np.ndarray, y: np.ndarray) -> float:
    """Two-sided exact p under the permutation null, ties via midranks.

    Works on doubled midranks (integers) and counts subsets by a rank-sum
    DP, so runtime is polynomial even though the null has C(n, n1) states.
    """
    n = len(values)
    n1 = int(y.sum())
    ranks2 = np.rint(2.0 * stats.rankdata(values)).astype(int)
    s_obs = int(ranks2[y == 1].sum())
    center = n1 * (n + 1)  # doubled expected rank sum
    dev = abs(s_obs - center)
    total_sum = int(ranks2.sum())
    # dp[k][s] = number of k-subsets with doubled rank sum s
    dp = [np.zeros(total_sum + 1, dtype=np.float64) for _ in range(n1 + 1)]
    dp[0][0] = 1.0
    for r in ranks2:
        for k in range(min(n1, n), 0, -1):
            dp[k][r:] += dp[k - 1][: total_sum + 1 - r]
    dist = dp[n1]
    sums = np.arange(total_sum + 1)
    hits = float(dist[np.abs(sums - center) >= dev].sum())
    return hits / float(math.comb(n, n1))


def mwu_column(values: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(two-sided p, rank-biserial effect) for one column.

    Exact enumeration for n <= 20, tie-corrected normal approximation above.
    Effect r = 2U/(n1*n0) - 1 where U counts positive-class wins.
    """
    n = len(values)
    n1 = int(np.sum(y == 1))
    n0 = n - n1
    if n1 == 0 or n0 == 0:
        raise TrainingError("MWU needs both classes")
    ranks = stats.rankdata(values)
    u1 = float(ranks[y == 1].sum()) - n1 * (n1 + 1) / 2.0
    effect = 2.0 * u1 / (n1 * n0) - 1.0
    if n <= EXACT_MWU_MAX_N:
        p = _exact_mwu_pvalue(values, y)
    else:
        if np.all(values == values[0]):
            p = 1.0  # constant column: no evidence either way
        else:
            res = stats.mannwhitneyu(
                values[y == 1], values[y == 0], alternative="two-sided", method="asymptotic"
            )
            p = float(res.pvalue)
    return p, effect


def mwu_rank(
    X: EncodedMatrix,
    columns: Optional[Sequence[str]] = None,
    alpha: float = 0.05,
    scope: str = "S1",
) -> FeatureRanking:
    cols = list(columns) if columns is not None else list(X.column_names)
    y = X.labels
    stats_by_col: dict[str, tuple[float, float]] = {}
    for c in cols:
        v = X.values[:, X.column_index(c)]
        stats_by_col[c] = mwu_column(v, y)
    selected = [c for c in cols if stats_by_col[c][0] < alpha]
    order = {c: i for i, c in enumerate(cols)}
    selected.sort(key=lambda c: (stats_by_col[c][0], -abs(stats_by_col[c][1]), order[c]))
    entries = tuple((c, i + 1, stats_by_col[c][0]) for i, c in enumerate(selected))
    return FeatureRanking(
        method_id="MWU",
        scope=scope,
        entries=entries,
        details={"p_values": {c: stats_by_col[c][0] for c in cols},
                 "effects": {c: stats_by_col[c][1] for c in cols},
                 "alpha": alpha},
    )


# ------------------------------------------------------------- LASSO sweep

LASSO_C_GRID = tuple(float(c) for c in np.logspace(-2.5, 2.0, 18))


def lasso_rank(
    X: EncodedMatrix,
    columns: Optional[Sequence[str]] = None,
    seed: int = 42,
    cv: int = 5,
    c_grid: Sequence[float] = LASSO_C_GRID,
    scope: str = "S1",
) -> FeatureRanking:
    """L1-logistic selection: pick C by CV balanced accuracy (ties favour the
    stronger penalty), keep nonzero coefficients, rank by |coefficient|."""
    cols = list(columns) if columns is not None else list(X.column_names)
    idx = [X.column_index(c) for c in cols]
    Xs = X.values[:, idx]
    y = X.labels
    folds = stratified_folds(y, k=cv, seed=seed)

    def fit_l1(C: float, Xtr, ytr) -> LogisticRegression:
        return LogisticRegression(
            penalty="l1", solver="liblinear", C=C, class_weight="balanced",
            max_iter=5000, random_state=seed,
        ).fit(Xtr, ytr)

    best_c, best_score = None, -np.inf
    grid_scores = {}
    for C in c_grid:
        scores = []
        for tr, te in folds:
            clf = fit_l1(C, Xs[tr], y[tr])
            pred = (clf.predict_proba(Xs[te])[:, 1] >= 0.5).astype(int)
            scores.append(balanced_accuracy(confusion(y[te], pred)))
        mean = float(np.mean(scores))
        grid_scores[C] = mean
        if mean > best_score:  # strict: earlier (smaller) C wins ties
            best_c, best_score = C, mean
    final = fit_l1(best_c, Xs, y)
    coefs = final.coef_[0]
    order = {c: i for i, c in enumerate(cols)}
    chosen = [c for c, w in zip(cols, coefs) if abs(w) > 1e-8]
    chosen.sort(key=lambda c: (-abs(coefs[cols.index(c)]), order[c]))
    entries = tuple((c, i + 1, float(abs(coefs[cols.index(c)]))) for i, c in enumerate(chosen))
    return FeatureRanking(
        method_id="LASSO",
        scope=scope,
        entries=entries,
        details={"C": best_c, "cv_score": best_score, "grid": grid_scores,
                 "coefficients": {c: float(w) for c, w in zip(cols, coefs)}},
    )


# ------------------------------------------------------ RFECV (hand-rolled)

def _importances(kind: str, est, n_cols: int) -> np.ndarray:
    if hasattr(est, "feature_importances_"):
        return np.asarray(est.feature_importances_, dtype=float)
    if hasattr(est, "coef_"):
        return np.abs(np.asarray(est.coef_[0], dtype=float))
    raise ParameterError(f"{kind}: estimator exposes no importances")


def rfecv_rank(
    X: EncodedMatrix,
    kind: str,
    columns: Optional[Sequence[str]] = None,
    seed: int = 42,
    cv: int = 5,
    scope: str = "S1",
    params: Optional[dict] = None,
) -> FeatureRanking:
    """Step-1 recursive elimination; the kept subset maximizes mean CV
    balanced accuracy (ties prefer fewer columns). Final ranks come from the
    refit model's importances, ties broken by column order.
    """
    if kind not in RFECV_KINDS:
        raise ParameterError(f"RFECV supports {RFECV_KINDS}, not {kind!r}")
    if not REGISTRY[kind].supports_importance:
        raise ParameterError(f"{kind} exposes no importances")
    cols = list(columns) if columns is not None else list(X.column_names)
    y = X.labels
    folds = stratified_folds(y, k=cv, seed=seed)
    spec = make_classifier(kind, params=params, seed=seed)

    def subset_score(active: list[str]) -> float:
        idx = [X.column_index(c) for c in active]
        Xa = X.values[:, idx]
        scores = []
        for tr, te in folds:
            est = fit_raw(spec, Xa[tr], y[tr])
            pred = (proba_raw(est, Xa[te]) >= 0.5).astype(int)
            scores.append(balanced_accuracy(confusion(y[te], pred)))
        return float(np.mean(scores))

    active = list(cols)
    trail: list[tuple[list[str], float]] = []
    while active:
        trail.append((active.copy(), subset_score(active)))
        if len(active) == 1:
            break
        idx = [X.column_index(c) for c in active]
        est = fit_raw(spec, X.values[:, idx], y)
        imp = _importances(kind, est, len(active))
        # drop the weakest column; among ties drop the one later in schema order
        weakest = min(range(len(active)), key=lambda j: (imp[j], -j))
        active.pop(weakest)

    best_cols, best_score = trail[0][0], trail[0][1]
    for subset, score in trail[1:]:
        if score > best_score or (score == best_score and len(subset) < len(best_cols)):
            best_cols, best_score = subset, score

    idx = [X.column_index(c) for c in best_cols]
    est = fit_raw(spec, X.values[:, idx], y)
    imp = _importances(kind, est, len(best_cols))
    order = {c: i for i, c in enumerate(cols)}
    ranked = sorted(best_cols, key=lambda c: (-imp[best_cols.index(c)], order[c]))
    entries = tuple((c, i + 1, float(imp[best_cols.index(c)])) for i, c in enumerate(ranked))
    return FeatureRanking(
        method_id=f"RFECV+{kind}",
        scope=scope,
        entries=entries,
        details={"cv_score": best_score,
                 "path": [(len(s), sc) for s, sc in trail],
                 "full_set_score": trail[0][1]},
    )


# elimination refits each ensemble ~n_cols * (cv+1) times; 60 trees rank
# columns just as stably as the model-zoo default at half the cost
_SELECTOR_PARAMS: dict[str, dict] = {
    "RF": {"n_estimators": 60},
    "ET": {"n_estimators": 60},
    "AB": {"n_estimators": 60},
    "GB": {"n_estimators": 60},
    "XGB": {"n_estimators": 60},
    "CB": {"n_estimators": 60},
}


def run_all_methods(
    X: EncodedMatrix, schema: CohortSchema, scope: str, seed: int = 42
) -> list[FeatureRanking]:
    """All ten methods on one scope, in the fixed method order."""
    cols = scope_columns(schema, X, scope)
    out: list[FeatureRanking] = []
    for kind in RFECV_KINDS:
        out.append(rfecv_rank(X, kind, columns=cols, seed=seed, scope=scope,
                              params=_SELECTOR_PARAMS.get(kind)))
    out.append(mwu_rank(X, columns=cols, scope=scope))
    out.append(lasso_rank(X, columns=cols, seed=seed, scope=scope))
    return out


# --------------------------------------------------------------- aggregation

def aggregate(
    rankings: Sequence[FeatureRanking], column_order: Sequence[str]
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(union, common) of the selected sets, both in schema column order."""
    if not rankings:
        raise ParameterError("aggregate needs at least one ranking")
    sel_sets = [r.selected for r in rankings]
    union = set().union(*sel_sets)
    common = set(sel_sets[0]).intersection(*sel_sets[1:])
    order = {c: i for i, c in enumerate(column_order)}
    return (
        tuple(sorted(union, key=lambda c: order[c])),
        tuple(sorted(common, key=lambda c: order[c])),
    )


def load_reference_rankings() -> dict[str, FeatureRanking]:
    """Recorded development-cohort rankings, keyed by 'method/scope'."""
    text = resources.files("ckdscreen.data").joinpath("reference_rankings.yaml").read_text()
    doc = yaml.safe_load(text)
    out: dict[str, FeatureRanking] = {}
    for method, scopes in doc["methods"].items():
        for scope, ordered in scopes.items():
            entries = tuple((c, i + 1, float("nan")) for i, c in enumerate(ordered))
            out[f"{method}/{scope}"] = FeatureRanking(
                method_id=method, scope=scope, entries=entries, details={"recorded": True}
            )
    return out


def load_preset_sets() -> dict[str, tuple[str, ...]]:
    text = resources.files("ckdscreen.data").joinpath("feature_sets.yaml").read_text()
    doc = yaml.safe_load(text)
    return {name: tuple(cols) for name, cols in doc.items()}


def build_catalog(
    schema: CohortSchema,
    rankings: Optional[Sequence[FeatureRanking]] = None,
    use_reference: bool = True,
) -> dict[str, tuple[str, ...]]:
    """Named feature sets over encoded columns.

    Contains the five group sets, the three merged groups, All, the BestS1 /
    BestS2 presets, and -- from supplied or recorded rankings -- per-method
    sets plus Union/Common per scope. Every named column is validated against
    the schema's encoded layout.
    """
    from .cohort import column_names_for

    all_cols = column_names_for(schema)
    col_feature = {}
    for f in schema.features:
        if f.kind == "binary":
            col_feature[f.name] = f
        else:
            for c in f.categories:
                col_feature[f"{f.name}_{c}"] = f

    def group_cols(groups: tuple[str, ...]) -> tuple[str, ...]:
        return tuple(c for c in all_cols if col_feature[c].group in groups)

    catalog: dict[str, tuple[str, ...]] = {
        "SD": group_cols(("SD",)),
        "LH": group_cols(("LH",)),
        "MH": group_cols(("MH",)),
        "CE": group_cols(("CE",)),
        "Path": group_cols(("Path",)),
        "SD-LH": group_cols(("SD", "LH")),
        "SD-LH-MH": group_cols(("SD", "LH", "MH")),
        "SD-LH-MH-CE": group_cols(("SD", "LH", "MH", "CE")),
        "All": tuple(all_cols),
    }
    catalog.update(load_preset_sets())

    ranking_list: list[FeatureRanking] = list(rankings) if rankings else []
    if not ranking_list and use_reference:
        ranking_list = list(load_reference_rankings().values())
    by_scope: dict[str, list[FeatureRanking]] = {"S1": [], "S2": []}
    for r in ranking_list:
        catalog[f"{r.scope}:{r.method_id}"] = r.ordered_columns()
        by_scope.setdefault(r.scope, []).append(r)
    for scope, rs in by_scope.items():
        if rs:
            union, common = aggregate(rs, all_cols)
            catalog[f"Union({scope})"] = union
            catalog[f"Common({scope})"] = common

    for name, cols in catalog.items():
        unknown = [c for c in cols if c not in all_cols]
        if unknown:
            raise ParameterError(f"set {name!r} names unknown columns {unknown}")
    return catalog
