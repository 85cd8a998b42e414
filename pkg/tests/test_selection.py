import itertools

import numpy as np
import pytest
from scipy import stats

from ckdscreen.cohort import EncodedMatrix, column_names_for
from ckdscreen.errors import ParameterError
from ckdscreen.selection import (
    METHOD_IDS,
    FeatureRanking,
    aggregate,
    build_catalog,
    lasso_rank,
    load_preset_sets,
    load_reference_rankings,
    mwu_column,
    mwu_rank,
    rfecv_rank,
    scope_columns,
)


def _matrix(X, y, names=None):
    names = names or tuple(f"c{j}" for j in range(X.shape[1]))
    return EncodedMatrix(
        column_names=tuple(names),
        values=np.asarray(X, dtype=float),
        labels=np.asarray(y, dtype=int),
        schema_hash="test",
    )


def _brute_mwu_p(values, y):
    # enumerate every label assignment of the same class sizes
    ranks = stats.rankdata(values)
    n, n1 = len(y), int(y.sum())
    mu = n1 * (n + 1) / 2.0
    obs = float(ranks[y == 1].sum())
    dev = abs(obs - mu)
    hits = total = 0
    for combo in itertools.combinations(range(n), n1):
        s = float(ranks[list(combo)].sum())
        total += 1
        if abs(s - mu) >= dev - 1e-12:
            hits += 1
    return hits / total


def test_mwu_exact_matches_enumeration(rng):
    for trial in range(12):
        n = int(rng.integers(6, 13))
        n1 = int(rng.integers(2, n - 1))
        y = np.array([1] * n1 + [0] * (n - n1))
        rng.shuffle(y)
        if trial % 2:
            values = rng.choice([0.0, 1.0, 2.0], size=n)  # heavy ties
        else:
            values = rng.normal(size=n)
        p, _ = mwu_column(values, y)
        assert abs(p - _brute_mwu_p(values, y)) <= 1e-12


def test_mwu_constant_column_not_selected():
    y = np.array([1] * 6 + [0] * 6)
    p, eff = mwu_column(np.ones(12), y)
    assert p == 1.0 and eff == 0.0
    y_big = np.array([1] * 30 + [0] * 30)
    p_big, _ = mwu_column(np.ones(60), y_big)
    assert p_big == 1.0


def test_mwu_effect_sign():
    y = np.array([1] * 10 + [0] * 10)
    hi = np.concatenate([np.ones(10), np.zeros(10)])
    p, eff = mwu_column(hi, y)
    assert eff > 0.9 and p < 0.001
    _, eff_neg = mwu_column(1 - hi, y)
    assert eff_neg < -0.9


def test_mwu_rank_orders_by_p(rng):
    n = 120
    y = np.array([1] * 60 + [0] * 60)
    strong = y + rng.normal(0, 0.3, n)
    weak = y + rng.normal(0, 2.0, n)
    noise = rng.normal(size=n)
    m = _matrix(np.column_stack([weak, noise, strong]), y, ("weak", "noise", "strong"))
    r = mwu_rank(m)
    assert r.ordered_columns()[0] == "strong"
    assert "noise" not in r.selected
    ps = [s for _, _, s in r.entries]
    assert ps == sorted(ps)
    assert set(r.details["p_values"]) == {"weak", "noise", "strong"}


def _or_toy(n=200, seed=0, flip=0.05):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, 6)).astype(float)
    y = ((X[:, 0].astype(int) | X[:, 1].astype(int))).astype(int)
    flips = rng.random(n) < flip
    y = np.where(flips, 1 - y, y)
    # OR of two fair coins is positive 3/4 of the time; keep both classes big enough
    return _matrix(X, y, ("inf_a", "inf_b", "n1", "n2", "n3", "n4")), y


def test_or_toy_mwu_and_lasso_top2():
    m, _ = _or_toy()
    for r in (mwu_rank(m), lasso_rank(m)):
        top2 = set(r.ordered_columns()[:2])
        assert top2 == {"inf_a", "inf_b"}, (r.method_id, r.entries)


@pytest.mark.parametrize("kind", ["DT", "RF", "GB", "LR"])
def test_or_toy_rfecv_top2(kind):
    m, _ = _or_toy()
    r = rfecv_rank(m, kind)
    assert set(r.ordered_columns()[:2]) == {"inf_a", "inf_b"}, r.entries


def test_lasso_strong_penalty_empties_selection():
    m, _ = _or_toy()
    r = lasso_rank(m, c_grid=[1e-4])
    assert r.entries == ()
    assert r.details["C"] == 1e-4


def test_lasso_ranks_by_coefficient_magnitude(rng):
    n = 300
    y = np.array([0, 1] * (n // 2))
    big = y * 2.0 + rng.normal(0, 0.4, n)
    small = y * 0.5 + rng.normal(0, 0.4, n)
    m = _matrix(np.column_stack([small, big]), y, ("small", "big"))
    r = lasso_rank(m)
    assert r.ordered_columns()[0] == "big"
    coefs = r.details["coefficients"]
    assert abs(coefs["big"]) > abs(coefs["small"])


def test_rfecv_keeps_single_informative_column(rng):
    n = 150
    y = np.array([1] * 75 + [0] * 75)
    X = rng.normal(size=(n, 5))
    X[:, 3] = y + rng.normal(0, 0.2, n)
    m = _matrix(X, y)
    r = rfecv_rank(m, "DT")
    assert r.ordered_columns()[0] == "c3"
    # kept subset never scores below the full set
    assert r.details["cv_score"] >= r.details["full_set_score"]


@pytest.mark.parametrize("kind", ["LR", "DT", "RF", "GB"])
def test_rfecv_subset_score_dominates_full(kind, rng):
    m, _ = _or_toy(n=150, seed=3)
    r = rfecv_rank(m, kind)
    assert r.details["cv_score"] >= r.details["full_set_score"]
    ranks = [k for _, k, _ in r.entries]
    assert ranks == list(range(1, len(ranks) + 1))


def test_rfecv_rejects_unsupported_kind():
    m, _ = _or_toy(n=60)
    with pytest.raises(ParameterError):
        rfecv_rank(m, "KNN")
    with pytest.raises(ParameterError):
        rfecv_rank(m, "SVM")


def test_ranking_invariants():
    with pytest.raises(ParameterError):
        FeatureRanking("MWU", "S1", entries=(("a", 1, 0.1), ("b", 3, 0.2)))
    with pytest.raises(ParameterError):
        FeatureRanking("MWU", "S1", entries=(("a", 1, 0.1), ("a", 2, 0.2)))


def test_aggregate_hand_case():
    r1 = FeatureRanking("MWU", "S1", entries=(("a", 1, 0.0), ("b", 2, 0.0)))
    r2 = FeatureRanking("LASSO", "S1", entries=(("b", 1, 1.0), ("c", 2, 0.5)))
    union, common = aggregate([r1, r2], ["a", "b", "c", "d"])
    assert union == ("a", "b", "c")
    assert common == ("b",)
    with pytest.raises(ParameterError):
        aggregate([], ["a"])


def test_reference_rankings_shape():
    ref = load_reference_rankings()
    for method in METHOD_IDS:
        assert f"{method}/S1" in ref and f"{method}/S2" in ref
    assert ref["MWU/S1"].ordered_columns()[:3] == ("Hypertension", "Age_60+y", "RBC")
    assert len(ref["RFECV+XGB/S1"].ordered_columns()) == 9


def test_reference_set_algebra(schema):
    ref = load_reference_rankings()
    cols = column_names_for(schema)
    s1 = [r for r in ref.values() if r.scope == "S1"]
    s2 = [r for r in ref.values() if r.scope == "S2"]
    _, common_s1 = aggregate(s1, cols)
    _, common_s2 = aggregate(s2, cols)
    assert set(common_s1) == {"Hypertension", "Age_60+y", "RBC"}
    assert set(common_s2) == {"Hypertension", "Age_60+y"}
    # the common set is contained in every per-method selection
    for r in s1:
        assert set(common_s1) <= r.selected
    for r in s2:
        assert set(common_s2) <= r.selected


def test_presets_match_recorded_best(schema):
    presets = load_preset_sets()
    ref = load_reference_rankings()
    assert presets["BestS1"] == ref["RFECV+CB/S1"].ordered_columns()
    assert set(presets["BestS2"]) == ref["RFECV+GB/S2"].selected
    assert len(presets["BestS1"]) == 9 and len(presets["BestS2"]) == 6


def test_catalog_group_sets(schema):
    cat = build_catalog(schema)
    assert len(cat["SD"]) == 13
    assert len(cat["LH"]) == 3
    assert len(cat["MH"]) == 7
    assert len(cat["CE"]) == 7
    assert len(cat["Path"]) == 5
    assert len(cat["SD-LH"]) == 16
    assert len(cat["SD-LH-MH"]) == 23
    assert len(cat["SD-LH-MH-CE"]) == 30
    assert len(cat["All"]) == 35
    # common sets come back in schema column order
    assert cat["Common(S1)"] == ("Age_60+y", "Hypertension", "RBC")
    assert cat["Common(S2)"] == ("Age_60+y", "Hypertension")
    assert "S1:RFECV+CB" in cat and "S2:MWU" in cat
    assert set(cat["BestS2"]) <= set(cat["SD-LH-MH-CE"])  # no lab columns


def test_scope_columns(schema, small_matrix):
    s1 = scope_columns(schema, small_matrix, "S1")
    s2 = scope_columns(schema, small_matrix, "S2")
    assert len(s1) == 35 and len(s2) == 30
    assert "RBC" in s1 and "RBC" not in s2
    assert "Low serum albumin" not in s2
    with pytest.raises(ParameterError):
        scope_columns(schema, small_matrix, "S3")
