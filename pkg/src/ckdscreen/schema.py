"""Cohort schema: feature specifications and discretization rules.

A CohortSchema declares every screening feature (name, group, categories),
how continuous measurements map into categories, and the label convention.
The packaged default schema covers the 24 community-screening features in
five groups (SD, LH, MH, CE, Path) together with the class-conditional
category counts used by the synthetic cohort sampler.
"""

from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import yaml

from .errors import SchemaError

FEATURE_GROUPS = ("SD", "LH", "MH", "CE", "Path")


@dataclass(frozen=True)
class DiscretizationRule:
    """Maps a continuous measurement to a category label.

    Bands are lower-inclusive / upper-exclusive: with breakpoints b1 < ... < bk
    the bands are (-inf, b1), [b1, b2), ..., [bk, +inf), labelled in order.
    Sex-specific rules carry one breakpoint vector per Gender category.
    """

    unit: str
    labels: tuple[str, ...]
    breakpoints: tuple[float, ...] = ()
    sex_breakpoints: Optional[dict[str, tuple[float, ...]]] = None
    sex_feature: Optional[str] = None

    def __post_init__(self):
        if self.sex_breakpoints is None and not self.breakpoints:
            raise SchemaError(f"rule with unit {self.unit!r} has no breakpoints")
        for bp in self._all_breakpoint_vectors():
            if len(bp) != len(self.labels) - 1:
                raise SchemaError(
                    f"{len(self.labels)} labels need {len(self.labels) - 1} breakpoints, got {len(bp)}"
                )
            if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
                raise SchemaError(f"breakpoints not strictly increasing: {bp}")

    def _all_breakpoint_vectors(self) -> list[tuple[float, ...]]:
        if self.sex_breakpoints is not None:
            return list(self.sex_breakpoints.values())
        return [self.breakpoints]

    def apply(self, value: float, sex: Optional[str] = None) -> str:
        if value is None or (isinstance(value, float) and math.isnan(value)):
            raise SchemaError(f"cannot discretize NaN/None ({self.unit})")
        if value < 0:
            raise SchemaError(f"negative {self.unit} value: {value}")
        if self.sex_breakpoints is not None:
            if sex is None:
                raise SchemaError(f"sex-specific rule ({self.unit}) needs a sex category")
            try:
                bp = self.sex_breakpoints[sex]
            except KeyError:
                raise SchemaError(f"no breakpoints for sex category {sex!r}") from None
        else:
            bp = self.breakpoints
        return self.labels[bisect_right(bp, value)]


@dataclass(frozen=True)
class FeatureSpec:
    """One screening feature: identity, group, categories, optional rule."""

    name: str
    group: str
    kind: str  # "binary" | "categorical"
    categories: tuple[str, ...]
    discretization: Optional[DiscretizationRule] = None
    description: str = ""

    def __post_init__(self):
        if self.group not in FEATURE_GROUPS:
            raise SchemaError(f"{self.name}: unknown group {self.group!r}")
        if self.kind not in ("binary", "categorical"):
            raise SchemaError(f"{self.name}: unknown kind {self.kind!r}")
        if len(set(self.categories)) != len(self.categories) or not self.categories:
            raise SchemaError(f"{self.name}: categories must be non-empty and unique")
        if self.kind == "binary" and len(self.categories) != 2:
            raise SchemaError(f"{self.name}: binary feature needs exactly 2 categories")
        if self.discretization is not None:
            if set(self.discretization.labels) != set(self.categories):
                raise SchemaError(f"{self.name}: rule labels must equal the categories")

    @property
    def indicator_category(self) -> str:
        """Category flagged by the one-hot column of a binary feature."""
        return self.categories[0]


@dataclass(frozen=True)
class CohortSchema:
    """Ordered feature specs plus the label convention."""

    features: tuple[FeatureSpec, ...]
    label_name: str = "CKD status"
    positive_label: str = "CKD"
    negative_label: str = "non-CKD"
    schema_version: int = 1
    # class -> feature -> category -> count; drives synthesize_cohort
    marginals: dict = field(default_factory=dict, compare=False)
    class_counts: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names")
        for f in self.features:
            rule = f.discretization
            if rule is not None and rule.sex_breakpoints is not None:
                sex_spec = self.get(rule.sex_feature or "")
                if sex_spec is None:
                    raise SchemaError(f"{f.name}: sex feature {rule.sex_feature!r} not in schema")
                if set(rule.sex_breakpoints) != set(sex_spec.categories):
                    raise SchemaError(
                        f"{f.name}: sex-specific breakpoints must cover {sex_spec.categories}"
                    )

    def get(self, name: str) -> Optional[FeatureSpec]:
        for f in self.features:
            if f.name == name:
                return f
        return None

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def group_features(self, group: str) -> tuple[FeatureSpec, ...]:
        return tuple(f for f in self.features if f.group == group)

    def to_dict(self) -> dict:
        feats = []
        for f in self.features:
            d: dict = {
                "name": f.name,
                "group": f.group,
                "kind": f.kind,
                "categories": list(f.categories),
            }
            if f.description:
                d["description"] = f.description
            r = f.discretization
            if r is not None:
                rd: dict = {"unit": r.unit, "labels": list(r.labels)}
                if r.sex_breakpoints is not None:
                    rd["sex_feature"] = r.sex_feature
                    rd["breakpoints"] = {k: list(v) for k, v in sorted(r.sex_breakpoints.items())}
                else:
                    rd["breakpoints"] = list(r.breakpoints)
                d["discretization"] = rd
            feats.append(d)
        return {
            "schema_version": self.schema_version,
            "label": {
                "name": self.label_name,
                "positive": self.positive_label,
                "negative": self.negative_label,
            },
            "features": feats,
        }

    @property
    def schema_hash(self) -> str:
        """Digest of the structural schema (not the marginals)."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def discretize(self, feature: str, value: float, sex: Optional[str] = None) -> str:
        spec = self.get(feature)
        if spec is None:
            raise SchemaError(f"unknown feature {feature!r}")
        if spec.discretization is None:
            raise SchemaError(f"{feature} has no discretization rule")
        return spec.discretization.apply(value, sex=sex)


def _rule_from_dict(d: dict, categories: tuple[str, ...]) -> DiscretizationRule:
    labels = tuple(d.get("labels", categories))
    bp = d.get("breakpoints")
    if isinstance(bp, dict):
        return DiscretizationRule(
            unit=d["unit"],
            labels=labels,
            sex_breakpoints={k: tuple(float(x) for x in v) for k, v in bp.items()},
            sex_feature=d.get("sex_feature", "Gender"),
        )
    return DiscretizationRule(unit=d["unit"], labels=labels, breakpoints=tuple(float(x) for x in bp))


def schema_from_dict(doc: dict) -> CohortSchema:
    feats = []
    marginals: dict = {}
    for fd in doc["features"]:
        categories = tuple(str(c) for c in fd["categories"])
        rule = _rule_from_dict(fd["discretization"], categories) if "discretization" in fd else None
        feats.append(
            FeatureSpec(
                name=fd["name"],
                group=fd["group"],
                kind=fd["kind"],
                categories=categories,
                discretization=rule,
                description=fd.get("description", ""),
            )
        )
        if "counts" in fd:
            marginals[fd["name"]] = {
                cls: {str(k): int(v) for k, v in by_cat.items()}
                for cls, by_cat in fd["counts"].items()
            }
    label = doc.get("label", {})
    return CohortSchema(
        features=tuple(feats),
        label_name=label.get("name", "CKD status"),
        positive_label=label.get("positive", "CKD"),
        negative_label=label.get("negative", "non-CKD"),
        schema_version=int(doc.get("schema_version", 1)),
        marginals=marginals,
        class_counts=dict(doc.get("class_counts", {})),
    )


def load_schema(path: Optional[str] = None) -> CohortSchema:
    """Load a schema YAML; with no path, the packaged screening schema."""
    if path is None:
        text = resources.files("ckdscreen.data").joinpath("primary_schema.yaml").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return schema_from_dict(yaml.safe_load(text))


def save_schema(schema: CohortSchema, path: str) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(schema.to_dict(), fh, sort_keys=False, allow_unicode=True)
