"""Shapley-value explanations for trained screening models.

Two estimators, one output shape:

* exact-tree: closed-form interventional Shapley values for tree ensembles.
  For each (foreground x, background z) pair and each leaf, the features on
  the leaf's path split into F (only x's value reaches the leaf) and B (only
  z's value does); the leaf's value val then contributes
      +val * (f-1)! b! / (f+b)!   to every feature in F, and
      -val * f! (b-1)! / (f+b)!   to every feature in B,
  with f=|F|, b=|B|. Summing over leaves and averaging over the background
  yields exact Shapley values of the interventional game. Probability space
  is exact for single trees and probability-averaging forests (DT/RF/ET);
  margin (log-odds) space is exact for the gradient-boosting family.

* sampling: seeded permutation estimator for any predict function. Each
  sample draws a background row and a feature order, then walks z -> x one
  feature at a time; increments telescope, so additivity
  (sum(contributions) = output - base) holds to float precision at any
  sample count. Per-feature Monte-Carlo standard errors are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ParameterError
from .models import TrainedModel, predict_proba
from .tuning import derive_seed

MAX_BACKGROUND = 64


@dataclass(frozen=True)
class Explanation:
    base_value: float
    contributions: dict[str, float]
    output_value: float
    output_space: str  # "probability" | "margin"
    method: str  # "exact-tree" | "sampling"
    stderr: Optional[dict[str, float]] = None

    @property
    def additivity_gap(self) -> float:
        return abs(sum(self.contributions.values()) - (self.output_value - self.base_value))


@dataclass(frozen=True)
class GlobalImportance:
    ordering: tuple[str, ...]  # columns by descending mean |contribution|
    mean_abs: dict[str, float]
    output_space: str
    method: str


# ------------------------------------------------------------- tree plumbing

@dataclass
class _LeafPath:
    value: float
    features: list[int]  # distinct feature indices on the path
    # per feature: list of (threshold, goes_left) constraints
    constraints: list[list[tuple[float, bool]]]


def _extract_leaf_paths(tree, leaf_value_fn) -> list[_LeafPath]:
    left, right = tree.children_left, tree.children_right
    feat, thr = tree.feature, tree.threshold
    out: list[_LeafPath] = []

    def walk(node: int, path: dict[int, list[tuple[float, bool]]]):
        if left[node] == -1:  # leaf
            feats = list(path.keys())
            out.append(
                _LeafPath(
                    value=leaf_value_fn(node),
                    features=feats,
                    constraints=[list(path[f]) for f in feats],
                )
            )
            return
        f = int(feat[node])
        t = float(thr[node])
        path.setdefault(f, [])
        path[f].append((t, True))
        walk(int(left[node]), path)
        path[f][-1] = (t, False)
        walk(int(right[node]), path)
        path[f].pop()
        if not path[f]:
            del path[f]

    walk(0, {})
    return out


def _classifier_leaf_value(tree) -> Callable[[int], float]:
    value = tree.value  # (nodes, 1, n_classes); counts or fractions

    def leaf_value(node: int) -> float:
        v = value[node][0]
        if len(v) == 1:
            return 1.0
        return float(v[1] / v.sum())

    return leaf_value


def _regressor_leaf_value(tree) -> Callable[[int], float]:
    value = tree.value

    def leaf_value(node: int) -> float:
        return float(value[node][0][0])

    return leaf_value


def _tree_ensemble(model: TrainedModel):
    """(leaf path lists, scale, space) for kinds with exact explanations."""
    kind = model.spec.kind
    est = model.estimator
    if kind == "DT":
        paths = [_extract_leaf_paths(est.tree_, _classifier_leaf_value(est.tree_))]
        return paths, 1.0, "probability"
    if kind in ("RF", "ET"):
        paths = [
            _extract_leaf_paths(t.tree_, _classifier_leaf_value(t.tree_))
            for t in est.estimators_
        ]
        return paths, 1.0 / len(est.estimators_), "probability"
    if kind in ("GB", "XGB", "LGB", "CB"):
        trees = [stage[0] for stage in est.estimators_]
        paths = [_extract_leaf_paths(t.tree_, _regressor_leaf_value(t.tree_)) for t in trees]
        return paths, float(est.learning_rate), "margin"
    return None


_W_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _weight_tables(max_fb: int) -> tuple[np.ndarray, np.ndarray]:
    """Wpos[f,b] = (f-1)! b! / (f+b)!;  Wneg[f,b] = f! (b-1)! / (f+b)!."""
    if max_fb in _W_CACHE:
        return _W_CACHE[max_fb]
    n = max_fb + 1
    wpos = np.zeros((n, n))
    wneg = np.zeros((n, n))
    for f in range(n):
        for b in range(n):
            if f >= 1:
                wpos[f, b] = float(
                    math.factorial(f - 1) * math.factorial(b)
                ) / float(math.factorial(f + b))
            if b >= 1:
                wneg[f, b] = float(
                    math.factorial(f) * math.factorial(b - 1)
                ) / float(math.factorial(f + b))
    _W_CACHE[max_fb] = (wpos, wneg)
    return wpos, wneg


def _pair_shap_matrix(
    leaf_paths: list[_LeafPath], x: np.ndarray, Z: np.ndarray, d: int
) -> np.ndarray:
    """Shapley values of one tree for x against every background row.

    Returns (n_z, d); row k sums to tree(x) - tree(z_k).
    """
    n_z = Z.shape[0]
    phi = np.zeros((n_z, d))
    max_fb = max((len(p.features) for p in leaf_paths), default=0)
    wpos, wneg = _weight_tables(max_fb)
    for leaf in leaf_paths:
        if not leaf.features:  # constant tree: no attribution
            continue
        m = len(leaf.features)
        x_cons = np.empty(m, dtype=bool)
        z_cons = np.empty((n_z, m), dtype=bool)
        for j, cons in enumerate(leaf.constraints):
            xc = True
            zc = np.ones(n_z, dtype=bool)
            col = leaf.features[j]
            for t, goes_left in cons:
                if goes_left:
                    xc = xc and (x[col] <= t)
                    zc &= Z[:, col] <= t
                else:
                    xc = xc and (x[col] > t)
                    zc &= Z[:, col] > t
            x_cons[j] = xc
            z_cons[:, j] = zc
        reachable = ~np.any(~x_cons[None, :] & ~z_cons, axis=1)
        if not reachable.any():
            continue
        f_cnt = np.sum(x_cons[None, :] & ~z_cons, axis=1)
        b_cnt = np.sum(~x_cons[None, :] & z_cons, axis=1)
        for j in range(m):
            col = leaf.features[j]
            if x_cons[j]:
                mask = reachable & ~z_cons[:, j]
                if mask.any():
                    phi[mask, col] += leaf.value * wpos[f_cnt[mask], b_cnt[mask]]
            else:
                mask = reachable & z_cons[:, j]
                if mask.any():
                    phi[mask, col] -= leaf.value * wneg[f_cnt[mask], b_cnt[mask]]
    return phi


def exact_tree_shap(
    model: TrainedModel, x: np.ndarray, background: np.ndarray
) -> tuple[np.ndarray, float, float, str]:
    """(phi, base, output, space) averaged over the background."""
    ens = _tree_ensemble(model)
    if ens is None:
        raise ParameterError(f"{model.spec.kind}: no exact tree explanation")
    all_paths, scale, space = ens
    d = len(model.columns)
    Z = np.atleast_2d(background)
    phi = np.zeros((Z.shape[0], d))
    for leaf_paths in all_paths:
        phi += _pair_shap_matrix(leaf_paths, x, Z, d)
    phi *= scale
    if space == "probability":
        out = float(predict_proba(model, x[None, :])[0])
        base = float(np.mean(predict_proba(model, Z)))
    else:
        out = float(model.estimator.decision_function(x[None, :])[0])
        base = float(np.mean(model.estimator.decision_function(Z)))
    return phi.mean(axis=0), base, out, space


def sampling_shap(
    predict: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    background: np.ndarray,
    n_samples: int = 512,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """(phi, stderr, base, output) by permutation sampling.

    Additivity is exact at any n_samples because each permutation telescopes
    from a background row to x.
    """
    rng = np.random.default_rng(seed)
    Z = np.atleast_2d(background)
    d = len(x)
    sums = np.zeros(d)
    sumsq = np.zeros(d)
    base_sum = 0.0
    rows = np.empty(((d + 1), d))
    # batch all samples into one predict call per chunk for speed
    chunk = max(1, min(n_samples, 4096 // (d + 1)))
    s = 0
    while s < n_samples:
        batch = min(chunk, n_samples - s)
        stacked = np.empty((batch * (d + 1), d))
        perms = np.empty((batch, d), dtype=int)
        for b in range(batch):
            z = Z[rng.integers(Z.shape[0])]
            perm = rng.permutation(d)
            perms[b] = perm
            cur = z.copy()
            rows[0] = cur
            for k, j in enumerate(perm):
                cur[j] = x[j]
                rows[k + 1] = cur
            stacked[b * (d + 1) : (b + 1) * (d + 1)] = rows
        preds = np.asarray(predict(stacked), dtype=float)
        for b in range(batch):
            seq = preds[b * (d + 1) : (b + 1) * (d + 1)]
            diffs = np.diff(seq)
            sums[perms[b]] += diffs
            sumsq[perms[b]] += diffs**2
            base_sum += seq[0]
        s += batch
    phi = sums / n_samples
    var = np.maximum(sumsq / n_samples - phi**2, 0.0)
    stderr = np.sqrt(var / n_samples)
    base = base_sum / n_samples
    out = float(np.asarray(predict(x[None, :]))[0])
    return phi, stderr, base, out


def _background_for(model: TrainedModel, background: Optional[np.ndarray], seed: int) -> np.ndarray:
    Z = background if background is not None else model.background
    if Z is None:
        raise ParameterError("no background rows available; pass background=")
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != len(model.columns):
        raise ParameterError(
            f"background has {Z.shape[1]} columns, model expects {len(model.columns)}"
        )
    if Z.shape[0] > MAX_BACKGROUND:
        rng = np.random.default_rng(derive_seed(seed, "background", Z.shape[0]))
        Z = Z[rng.choice(Z.shape[0], size=MAX_BACKGROUND, replace=False)]
    return Z


def explain_local(
    model: TrainedModel,
    x: np.ndarray,
    background: Optional[np.ndarray] = None,
    space: str = "auto",
    method: str = "auto",
    n_samples: int = 512,
    seed: int = 0,
) -> Explanation:
    """Per-column contributions for one encoded row.

    space: "probability" (default for serving), "margin" (exact for the
    boosting family), or "auto" = the space in which the model kind admits an
    exact explanation, falling back to probability.
    method: "exact" | "sampling" | "auto" (exact when available).
    """
    x = np.asarray(x, dtype=float).ravel()
    if len(x) != len(model.columns):
        raise ParameterError(f"row has {len(x)} values, model expects {len(model.columns)}")
    Z = _background_for(model, background, seed)
    ens = _tree_ensemble(model)
    exact_space = ens[2] if ens is not None else None
    if space == "auto":
        space = exact_space or "probability"
    if space not in ("probability", "margin"):
        raise ParameterError(f"unknown output space {space!r}")
    if space == "margin" and exact_space != "margin":
        raise ParameterError(f"{model.spec.kind} has no margin-space explanation")
    if method == "auto":
        method = "exact" if exact_space == space else "sampling"
    if method == "exact":
        if exact_space != space:
            raise ParameterError(
                f"{model.spec.kind}: exact explanation lives in {exact_space or 'no'} space"
            )
        phi, base, out, _ = exact_tree_shap(model, x, Z)
        return Explanation(
            base_value=base,
            contributions={c: float(v) for c, v in zip(model.columns, phi)},
            output_value=out,
            output_space=space,
            method="exact-tree",
        )
    if method != "sampling":
        raise ParameterError(f"unknown method {method!r}")
    if space == "margin":
        predict = lambda rows: model.estimator.decision_function(rows)  # noqa: E731
    else:
        predict = lambda rows: predict_proba(model, rows)  # noqa: E731
    phi, stderr, base, out = sampling_shap(predict, x, Z, n_samples=n_samples, seed=seed)
    return Explanation(
        base_value=base,
        contributions={c: float(v) for c, v in zip(model.columns, phi)},
        output_value=out,
        output_space=space,
        method="sampling",
        stderr={c: float(v) for c, v in zip(model.columns, stderr)},
    )


def explain_global(
    model: TrainedModel,
    X: np.ndarray,
    background: Optional[np.ndarray] = None,
    space: str = "auto",
    method: str = "auto",
    n_samples: int = 128,
    seed: int = 0,
) -> GlobalImportance:
    """Mean |contribution| per column over the rows of X, ordered descending
    (ties broken by column order)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    acc = np.zeros(len(model.columns))
    used_space = used_method = None
    for i in range(X.shape[0]):
        e = explain_local(
            model, X[i], background=background, space=space, method=method,
            n_samples=n_samples, seed=derive_seed(seed, "row", i),
        )
        acc += np.abs([e.contributions[c] for c in model.columns])
        used_space, used_method = e.output_space, e.method
    mean_abs = acc / X.shape[0]
    order = sorted(
        range(len(model.columns)), key=lambda j: (-mean_abs[j], j)
    )
    return GlobalImportance(
        ordering=tuple(model.columns[j] for j in order),
        mean_abs={c: float(v) for c, v in zip(model.columns, mean_abs)},
        output_space=used_space or "probability",
        method=used_method or "sampling",
    )
