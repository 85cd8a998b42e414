"""Classifier registry and training.

Twelve classifier kinds sit behind one registry so selection, tuning,
evaluation, and explanation code never special-cases an estimator. The three
gradient-boosting variants XGB/LGB/CB are realized on scikit-learn's
gradient-boosting engine with distinct growth/regularization settings:
XGB adds stochastic row+column subsampling, LGB grows leaf-wise under a leaf
budget, CB constrains complexity via cost-complexity pruning and leaf minima.

Class imbalance: kinds with native class_weight use "balanced"; boosting
kinds receive balanced sample weights at fit time; KNN/MLP support neither,
so their specs record class_weighting="none".
"""

from __future__ import annotations

import hashlib
import json
import pickle
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
import yaml
from sklearn.ensemble import (
    AdaBoostClassifier,
    ExtraTreesClassifier,
    GradientBoostingClassifier,
    RandomForestClassifier,
)
from sklearn.linear_model import LogisticRegression
from sklearn.neighbors import KNeighborsClassifier
from sklearn.neural_network import MLPClassifier
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier
from sklearn.utils.class_weight import compute_sample_weight

from . import __version__
from .cohort import EncodedMatrix
from .errors import ParameterError, SchemaMismatchError, TrainingError

ARTIFACT_FORMAT = 1


@dataclass(frozen=True)
class KindInfo:
    id: str
    label: str
    family: str
    native_class_weight: bool
    accepts_sample_weight: bool
    supports_importance: bool
    default_class_weighting: str


REGISTRY: dict[str, KindInfo] = {
    k.id: k
    for k in (
        KindInfo("LR", "Logistic regression", "linear", True, True, True, "balanced"),
        KindInfo("DT", "Decision tree", "tree", True, True, True, "balanced"),
        KindInfo("KNN", "k-nearest neighbours", "neighbors", False, False, False, "none"),
        KindInfo("SVM", "Support vector machine", "kernel", True, True, False, "balanced"),
        KindInfo("RF", "Random forest", "ensemble", True, True, True, "balanced"),
        KindInfo("ET", "Extra trees", "ensemble", True, True, True, "balanced"),
        KindInfo("AB", "AdaBoost", "boosting", False, True, True, "balanced"),
        KindInfo("GB", "Gradient boosting", "boosting", False, True, True, "balanced"),
        KindInfo("XGB", "Subsampled gradient boosting", "boosting", False, True, True, "balanced"),
        KindInfo("LGB", "Leaf-wise gradient boosting", "boosting", False, True, True, "balanced"),
        KindInfo("CB", "Pruned gradient boosting", "boosting", False, True, True, "balanced"),
        KindInfo("MLP", "Multilayer perceptron", "neural", False, False, False, "none"),
    )
}

KIND_ORDER = tuple(REGISTRY)  # registry order breaks selection ties


def load_search_spaces() -> dict[str, dict]:
    text = resources.files("ckdscreen.data").joinpath("search_spaces.yaml").read_text()
    return yaml.safe_load(text)


_SPACES = None


def search_space(kind: str) -> dict[str, dict]:
    global _SPACES
    if _SPACES is None:
        _SPACES = load_search_spaces()
    if kind not in _SPACES:
        raise ParameterError(f"no search space for kind {kind!r}")
    return _SPACES[kind]


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: dict = field(default_factory=dict)
    class_weighting: str = "balanced"
    seed: int = 42

    def digest(self) -> str:
        canon = json.dumps(
            {
                "kind": self.kind,
                "params": self.params,
                "class_weighting": self.class_weighting,
                "seed": self.seed,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canon.encode()).hexdigest()


def _validate_params(kind: str, params: dict) -> None:
    space = search_space(kind)
    for name, value in params.items():
        if name not in space:
            raise ParameterError(f"{kind}: unknown parameter {name!r}")
        p = space[name]
        if p["type"] == "cat":
            if value not in p["choices"]:
                raise ParameterError(f"{kind}.{name}: {value!r} not in {p['choices']}")
        else:
            if not (p["low"] <= value <= p["high"]):
                raise ParameterError(
                    f"{kind}.{name}: {value} outside [{p['low']}, {p['high']}]"
                )
            if p["type"] == "int" and int(value) != value:
                raise ParameterError(f"{kind}.{name}: expected integer, got {value}")


def make_classifier(
    kind: str,
    params: Optional[dict] = None,
    seed: int = 42,
    class_weighting: Optional[str] = None,
) -> ModelSpec:
    """Validated ModelSpec for a registered kind; params default to {}."""
    if kind not in REGISTRY:
        raise ParameterError(f"unknown classifier kind {kind!r} (have {', '.join(REGISTRY)})")
    params = dict(params or {})
    _validate_params(kind, params)
    cw = class_weighting if class_weighting is not None else REGISTRY[kind].default_class_weighting
    if cw not in ("balanced", "none"):
        raise ParameterError(f"class_weighting must be 'balanced' or 'none', got {cw!r}")
    if cw == "balanced" and not (
        REGISTRY[kind].native_class_weight or REGISTRY[kind].accepts_sample_weight
    ):
        cw = "none"
    return ModelSpec(kind=kind, params=params, class_weighting=cw, seed=seed)


def build_estimator(spec: ModelSpec):
    """Instantiate the sklearn estimator behind a spec."""
    p = dict(spec.params)
    seed = spec.seed
    cw = "balanced" if spec.class_weighting == "balanced" else None
    kind = spec.kind
    if kind == "LR":
        return LogisticRegression(
            C=p.get("C", 1.0), max_iter=2000, class_weight=cw, random_state=seed
        )
    if kind == "DT":
        return DecisionTreeClassifier(
            max_depth=p.get("max_depth"),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            criterion=p.get("criterion", "gini"),
            class_weight=cw,
            random_state=seed,
        )
    if kind == "KNN":
        return KNeighborsClassifier(
            n_neighbors=p.get("n_neighbors", 5),
            weights=p.get("weights", "uniform"),
            p=p.get("p", 2),
        )
    if kind == "SVM":
        return SVC(
            C=p.get("C", 1.0),
            gamma=p.get("gamma", "scale"),
            kernel=p.get("kernel", "rbf"),
            probability=True,
            class_weight=cw,
            random_state=seed,
        )
    if kind == "RF":
        return RandomForestClassifier(
            n_estimators=p.get("n_estimators", 100),
            max_depth=p.get("max_depth"),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            max_features=p.get("max_features", "sqrt"),
            class_weight=cw,
            random_state=seed,
            n_jobs=1,
        )
    if kind == "ET":
        return ExtraTreesClassifier(
            n_estimators=p.get("n_estimators", 100),
            max_depth=p.get("max_depth"),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            max_features=p.get("max_features", "sqrt"),
            class_weight=cw,
            random_state=seed,
            n_jobs=1,
        )
    if kind == "AB":
        return AdaBoostClassifier(
            n_estimators=p.get("n_estimators", 50),
            learning_rate=p.get("learning_rate", 1.0),
            random_state=seed,
        )
    if kind == "GB":
        return GradientBoostingClassifier(
            n_estimators=p.get("n_estimators", 100),
            learning_rate=p.get("learning_rate", 0.1),
            max_depth=p.get("max_depth", 3),
            random_state=seed,
        )
    if kind == "XGB":
        return GradientBoostingClassifier(
            n_estimators=p.get("n_estimators", 100),
            learning_rate=p.get("learning_rate", 0.1),
            max_depth=p.get("max_depth", 3),
            subsample=p.get("subsample", 0.8),
            max_features=p.get("max_features", 0.8),
            random_state=seed,
        )
    if kind == "LGB":
        return GradientBoostingClassifier(
            n_estimators=p.get("n_estimators", 100),
            learning_rate=p.get("learning_rate", 0.1),
            max_depth=None,
            max_leaf_nodes=p.get("max_leaf_nodes", 31),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            random_state=seed,
        )
    if kind == "CB":
        return GradientBoostingClassifier(
            n_estimators=p.get("n_estimators", 100),
            learning_rate=p.get("learning_rate", 0.1),
            max_depth=p.get("max_depth", 4),
            ccp_alpha=p.get("ccp_alpha", 0.0),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            random_state=seed,
        )
    if kind == "MLP":
        return MLPClassifier(
            hidden_layer_sizes=(p.get("hidden_units", 16),),
            alpha=p.get("alpha", 1e-4),
            learning_rate_init=p.get("learning_rate_init", 1e-3),
            max_iter=200,
            random_state=seed,
        )
    raise ParameterError(f"unknown classifier kind {kind!r}")


def fit_raw(spec: ModelSpec, X: np.ndarray, y: np.ndarray):
    """Fit an estimator on raw arrays (used by CV loops and tuning)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if np.isnan(X).any():
        raise TrainingError("training matrix contains NaN")
    if X.shape[0] != len(y):
        raise TrainingError("X and y length mismatch")
    if len(np.unique(y)) < 2:
        raise TrainingError("training labels contain a single class")
    est = build_estimator(spec)
    info = REGISTRY[spec.kind]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # MLP/LR convergence chatter during search
        if spec.class_weighting == "balanced" and not info.native_class_weight and info.accepts_sample_weight:
            est.fit(X, y, sample_weight=compute_sample_weight("balanced", y))
        else:
            est.fit(X, y)
    return est


def proba_raw(est, X: np.ndarray) -> np.ndarray:
    """P(positive class) for a fitted estimator."""
    proba = est.predict_proba(np.asarray(X, dtype=np.float64))
    pos_index = int(np.where(est.classes_ == 1)[0][0])
    return proba[:, pos_index]


@dataclass
class TrainedModel:
    """Fitted classifier plus everything needed to serve and explain it."""

    spec: ModelSpec
    schema_hash: str
    columns: tuple[str, ...]
    estimator: object
    data_digest: str
    feature_set_name: str = "custom"
    threshold: float = 0.5
    background: Optional[np.ndarray] = None  # training matrix for explanations
    fitted: bool = True

    def digest(self) -> str:
        canon = json.dumps(
            {
                "spec": self.spec.digest(),
                "schema_hash": self.schema_hash,
                "columns": list(self.columns),
                "data": self.data_digest,
                "threshold": self.threshold,
            },
            sort_keys=True,
        )
        return hashlib.sha256(canon.encode()).hexdigest()


def train(spec: ModelSpec, X: EncodedMatrix, feature_set_name: str = "custom") -> TrainedModel:
    est = fit_raw(spec, X.values, X.labels)
    return TrainedModel(
        spec=spec,
        schema_hash=X.schema_hash,
        columns=X.column_names,
        estimator=est,
        data_digest=X.data_digest(),
        feature_set_name=feature_set_name,
        background=X.values.copy(),
    )


def predict_proba(model: TrainedModel, X: np.ndarray, schema_hash: Optional[str] = None) -> np.ndarray:
    """P(positive) for rows aligned to model.columns.

    When the caller carries a schema digest it must match the one the model
    was trained under; mismatches are refused rather than silently scored.
    """
    if schema_hash is not None and schema_hash != model.schema_hash:
        raise SchemaMismatchError(
            f"input schema {schema_hash[:12]} != model schema {model.schema_hash[:12]}"
        )
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != len(model.columns):
        raise TrainingError(f"expected {len(model.columns)} columns, got {X.shape[1]}")
    if np.isnan(X).any():
        raise TrainingError("prediction input contains NaN")
    return proba_raw(model.estimator, X)


def save_model(model: TrainedModel, path: str) -> None:
    payload = {
        "format": ARTIFACT_FORMAT,
        "package_version": __version__,
        "spec": {
            "kind": model.spec.kind,
            "params": model.spec.params,
            "class_weighting": model.spec.class_weighting,
            "seed": model.spec.seed,
        },
        "schema_hash": model.schema_hash,
        "columns": list(model.columns),
        "estimator": model.estimator,
        "data_digest": model.data_digest,
        "feature_set_name": model.feature_set_name,
        "threshold": model.threshold,
        "background": model.background,
    }
    with open(path, "wb") as fh:
        pickle.dump(payload, fh, protocol=4)


def load_model(path: str) -> TrainedModel:
    with open(path, "rb") as fh:
        payload = pickle.load(fh)
    if payload.get("format") != ARTIFACT_FORMAT:
        raise TrainingError(f"unsupported artifact format {payload.get('format')!r}")
    spec = ModelSpec(
        kind=payload["spec"]["kind"],
        params=payload["spec"]["params"],
        class_weighting=payload["spec"]["class_weighting"],
        seed=payload["spec"]["seed"],
    )
    return TrainedModel(
        spec=spec,
        schema_hash=payload["schema_hash"],
        columns=tuple(payload["columns"]),
        estimator=payload["estimator"],
        data_digest=payload["data_digest"],
        feature_set_name=payload["feature_set_name"],
        threshold=payload["threshold"],
        background=payload["background"],
    )
