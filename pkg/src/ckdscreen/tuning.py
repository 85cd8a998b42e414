"""Budgeted hyperparameter search.

Two samplers share one interface: "random" draws uniformly from the declared
space; "smbo" is a tree-structured-Parzen-style sequential optimizer -- after
a random startup phase it splits the history at the gamma quantile, models
good and bad trials with per-parameter kernel densities, and picks the
candidate maximizing the good/bad density ratio. Everything is seeded:
trial t of a search with master seed s uses a seed derived from (s, t), so
identical budgets reproduce identical trial logs bit for bit.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError, TrainingError
from .metrics import balanced_accuracy, confusion, stratified_folds
from .models import ModelSpec, fit_raw, make_classifier, proba_raw, search_space

N_STARTUP = 10
GAMMA = 0.25
N_CANDIDATES = 24


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary parts (master seed, trial index...)."""
    h = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "big") >> 1


@dataclass(frozen=True)
class SearchBudget:
    n_trials: int = 50
    sampler: str = "smbo"
    seed: int = 42

    def __post_init__(self):
        if self.n_trials < 1:
            raise ParameterError("budget needs at least one trial")
        if self.sampler not in ("smbo", "random"):
            raise ParameterError(f"unknown sampler {self.sampler!r}")


@dataclass
class Trial:
    index: int
    params: dict
    score: float
    seed: int


@dataclass
class TuneResult:
    kind: str
    best: ModelSpec
    best_score: float
    trials: list[Trial] = field(default_factory=list)

    def log(self) -> list[dict]:
        return [
            {"trial": t.index, "params": t.params, "score": t.score, "seed": t.seed}
            for t in self.trials
        ]


def _sample_random(space: dict[str, dict], rng: np.random.Generator) -> dict:
    params = {}
    for name, p in space.items():
        if p["type"] == "cat":
            params[name] = p["choices"][int(rng.integers(len(p["choices"])))]
        elif p["type"] == "int":
            params[name] = int(rng.integers(p["low"], p["high"] + 1))
        else:
            if p.get("log"):
                params[name] = float(
                    10 ** rng.uniform(math.log10(p["low"]), math.log10(p["high"]))
                )
            else:
                params[name] = float(rng.uniform(p["low"], p["high"]))
    return params


def _to_unit(p: dict, v) -> float:
    # numeric value -> transformed coordinate used by the kernels
    if p.get("log"):
        return math.log10(v)
    return float(v)


def _from_unit(p: dict, u: float):
    lo, hi = _to_unit(p, p["low"]), _to_unit(p, p["high"])
    u = min(max(u, lo), hi)
    v = 10**u if p.get("log") else u
    if p["type"] == "int":
        v = int(round(v))
        v = min(max(v, p["low"]), p["high"])
    return v


def _kde_logpdf(x: float, points: list[float], bandwidth: float) -> float:
    if not points:
        return 0.0
    acc = 0.0
    for m in points:
        acc += math.exp(-0.5 * ((x - m) / bandwidth) ** 2)
    return math.log(acc / (len(points) * bandwidth) + 1e-300)


def _sample_smbo(
    space: dict[str, dict], history: list[Trial], rng: np.random.Generator
) -> dict:
    if len(history) < N_STARTUP:
        return _sample_random(space, rng)
    ranked = sorted(history, key=lambda t: (-t.score, t.index))
    n_good = max(1, math.ceil(GAMMA * len(ranked)))
    good, bad = ranked[:n_good], ranked[n_good:]
    params: dict = {}
    for name, p in space.items():
        if p["type"] == "cat":
            choices = p["choices"]
            g_counts = np.array(
                [1.0 + sum(1 for t in good if t.params[name] == c) for c in choices]
            )
            b_counts = np.array(
                [1.0 + sum(1 for t in bad if t.params[name] == c) for c in choices]
            )
            ratio = (g_counts / g_counts.sum()) / (b_counts / b_counts.sum())
            weights = ratio / ratio.sum()
            params[name] = choices[int(rng.choice(len(choices), p=weights))]
            continue
        lo, hi = _to_unit(p, p["low"]), _to_unit(p, p["high"])
        bw = max((hi - lo) / 8.0, 1e-12)
        g_pts = [_to_unit(p, t.params[name]) for t in good]
        b_pts = [_to_unit(p, t.params[name]) for t in bad]
        best_u, best_ratio = None, -math.inf
        for _ in range(N_CANDIDATES):
            center = g_pts[int(rng.integers(len(g_pts)))]
            u = float(rng.normal(center, bw))
            u = min(max(u, lo), hi)
            r = _kde_logpdf(u, g_pts, bw) - _kde_logpdf(u, b_pts, bw)
            if r > best_ratio:
                best_u, best_ratio = u, r
        params[name] = _from_unit(p, best_u)
    return params


def cv_score(spec: ModelSpec, X: np.ndarray, y: np.ndarray, folds) -> float:
    """Mean balanced accuracy over pre-computed folds at threshold 0.5."""
    scores = []
    for tr, te in folds:
        est = fit_raw(spec, X[tr], y[tr])
        pred = (proba_raw(est, X[te]) >= 0.5).astype(int)
        scores.append(balanced_accuracy(confusion(y[te], pred)))
    return float(np.mean(scores))


def tune(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    budget: SearchBudget,
    tune_folds: int = 5,
    class_weighting: Optional[str] = None,
) -> TuneResult:
    """Search the kind's declared space for the best CV balanced accuracy.

    The returned spec is always the argmax of the trial log (earliest trial
    wins ties), so its logged score is never below any trial's.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if np.isnan(X).any():
        raise TrainingError("tuning matrix contains NaN")
    space = search_space(kind)
    folds = stratified_folds(y, k=tune_folds, seed=budget.seed)
    trials: list[Trial] = []
    for i in range(budget.n_trials):
        t_seed = derive_seed(budget.seed, kind, i)
        rng = np.random.default_rng(t_seed)
        if budget.sampler == "random":
            params = _sample_random(space, rng)
        else:
            params = _sample_smbo(space, trials, rng)
        spec = make_classifier(kind, params, seed=t_seed % (2**31), class_weighting=class_weighting)
        score = cv_score(spec, X, y, folds)
        trials.append(Trial(index=i, params=params, score=score, seed=spec.seed))
    best_trial = max(trials, key=lambda t: (t.score, -t.index))
    best_spec = make_classifier(
        kind, best_trial.params, seed=best_trial.seed, class_weighting=class_weighting
    )
    return TuneResult(kind=kind, best=best_spec, best_score=best_trial.score, trials=trials)
