import numpy as np
import pytest

from ckdscreen import encode_onehot
from ckdscreen.errors import ParameterError, SchemaMismatchError, TrainingError
from ckdscreen.models import (
    KIND_ORDER,
    REGISTRY,
    ModelSpec,
    build_estimator,
    fit_raw,
    load_model,
    make_classifier,
    predict_proba,
    proba_raw,
    save_model,
    train,
)


def test_registry_has_all_twelve():
    assert KIND_ORDER == ("LR", "DT", "KNN", "SVM", "RF", "ET", "AB", "GB", "XGB", "LGB", "CB", "MLP")
    for kind in KIND_ORDER:
        spec = make_classifier(kind)
        assert spec.kind == kind
        build_estimator(spec)  # must instantiate


def test_make_classifier_validation():
    with pytest.raises(ParameterError):
        make_classifier("HistGB")
    with pytest.raises(ParameterError):
        make_classifier("DT", {"depth": 3})
    with pytest.raises(ParameterError):
        make_classifier("DT", {"max_depth": 99})
    with pytest.raises(ParameterError):
        make_classifier("DT", {"max_depth": 2.5})
    with pytest.raises(ParameterError):
        make_classifier("KNN", {"weights": "triangular"})
    with pytest.raises(ParameterError):
        make_classifier("LR", class_weighting="upweighted")


def test_class_weighting_defaults():
    assert make_classifier("LR").class_weighting == "balanced"
    assert make_classifier("GB").class_weighting == "balanced"
    # kinds that cannot honour weights record "none"
    assert make_classifier("KNN").class_weighting == "none"
    assert make_classifier("MLP").class_weighting == "none"
    assert make_classifier("MLP", class_weighting="balanced").class_weighting == "none"


def test_spec_digest_deterministic():
    a = make_classifier("RF", {"n_estimators": 50}, seed=1)
    b = make_classifier("RF", {"n_estimators": 50}, seed=1)
    c = make_classifier("RF", {"n_estimators": 51}, seed=1)
    assert a.digest() == b.digest() != c.digest()


def _toy(n=120, seed=3):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, 5)).astype(float)
    y = X[:, 0].astype(int)  # perfectly separable on column 0
    # keep both classes guaranteed
    y[0], y[1] = 0, 1
    X[0, 0], X[1, 0] = 0.0, 1.0
    return X, y


@pytest.mark.parametrize("kind", KIND_ORDER)
def test_each_kind_learns_separable_toy(kind):
    X, y = _toy()
    spec = make_classifier(kind, seed=11)
    est = fit_raw(spec, X, y)
    p = proba_raw(est, X)
    assert p.shape == (len(y),)
    assert np.all((p >= 0) & (p <= 1))
    acc = ((p >= 0.5).astype(int) == y).mean()
    assert acc >= 0.95, (kind, acc)


@pytest.mark.parametrize("kind", KIND_ORDER)
def test_fit_is_deterministic(kind):
    X, y = _toy(seed=5)
    spec = make_classifier(kind, seed=7)
    p1 = proba_raw(fit_raw(spec, X, y), X)
    p2 = proba_raw(fit_raw(spec, X, y), X)
    assert np.array_equal(p1, p2)


def test_constant_tree_predicts_prior():
    X = np.zeros((20, 3))
    y = np.array([1] * 15 + [0] * 5)
    est = fit_raw(make_classifier("DT", class_weighting="none"), X, y)
    assert proba_raw(est, X[:1])[0] == pytest.approx(0.75)


def test_balanced_weights_match_duplication():
    # balanced class weights must equal physically duplicating the minority:
    # 2:1 imbalance, so stacking the minority class twice gives the same
    # optimum as weighting it 2x. Compare LR coefficients.
    rng = np.random.default_rng(9)
    X_maj = rng.normal(0, 1, size=(80, 3))
    X_min = rng.normal(1, 1, size=(40, 3))
    X = np.vstack([X_maj, X_min])
    y = np.array([0] * 80 + [1] * 40)
    Xdup = np.vstack([X_maj, X_min, X_min])
    ydup = np.array([0] * 80 + [1] * 80)
    # (unpenalized: L2 would scale differently against a duplicated data term)
    from sklearn.linear_model import LogisticRegression

    w = LogisticRegression(class_weight="balanced", penalty=None, max_iter=5000, tol=1e-10).fit(X, y)
    d = LogisticRegression(penalty=None, max_iter=5000, tol=1e-10).fit(Xdup, ydup)
    assert np.allclose(w.coef_, d.coef_, atol=1e-5)
    assert np.allclose(w.intercept_, d.intercept_, atol=1e-5)


def test_fit_raw_input_validation():
    X, y = _toy()
    spec = make_classifier("LR")
    Xnan = X.copy()
    Xnan[0, 0] = np.nan
    with pytest.raises(TrainingError):
        fit_raw(spec, Xnan, y)
    with pytest.raises(TrainingError):
        fit_raw(spec, X, y[:-1])
    with pytest.raises(TrainingError):
        fit_raw(spec, X, np.zeros(len(y), dtype=int))


def test_train_produces_servable_model(small_matrix):
    sub = small_matrix.select(["Hypertension", "Age_60+y", "Anemia", "Diabetes"])
    model = train(make_classifier("DT", {"max_depth": 4}), sub, feature_set_name="demo")
    assert model.schema_hash == small_matrix.schema_hash
    assert model.columns == sub.column_names
    assert model.feature_set_name == "demo"
    assert model.threshold == 0.5
    p = predict_proba(model, sub.values[:5])
    assert p.shape == (5,)


def test_predict_refuses_schema_mismatch(small_matrix):
    sub = small_matrix.select(["Hypertension", "Age_60+y"])
    model = train(make_classifier("LR"), sub)
    with pytest.raises(SchemaMismatchError):
        predict_proba(model, sub.values[:2], schema_hash="deadbeef")
    with pytest.raises(TrainingError):
        predict_proba(model, small_matrix.values[:2])  # wrong width
    bad = sub.values[:2].copy()
    bad[0, 0] = np.nan
    with pytest.raises(TrainingError):
        predict_proba(model, bad)


def test_save_load_round_trip(tmp_path, small_matrix):
    sub = small_matrix.select(["Hypertension", "Age_60+y", "RBC"])
    model = train(make_classifier("RF", {"n_estimators": 40}, seed=2), sub, "BestS1")
    p = tmp_path / "model.pkl"
    save_model(model, str(p))
    back = load_model(str(p))
    assert back.spec == model.spec
    assert back.columns == model.columns
    assert back.schema_hash == model.schema_hash
    assert back.feature_set_name == "BestS1"
    assert np.array_equal(
        predict_proba(back, sub.values[:10]), predict_proba(model, sub.values[:10])
    )
    assert back.digest() == model.digest()


def test_registry_metadata_consistency():
    for kind, info in REGISTRY.items():
        est = build_estimator(make_classifier(kind))
        has_cw = "class_weight" in est.get_params()
        assert has_cw == info.native_class_weight, kind
