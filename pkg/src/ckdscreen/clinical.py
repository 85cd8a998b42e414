"""Established CKD screening scores as data-driven tools.

Each tool (SCORED, KSHIRSAGAR, SPS, KEARNS, KWON) lives in a versioned YAML
table under data/tools/: citation, scoring items, decision rule, and a
binding map onto the cohort schema. Additive tools sum integer points;
logistic tools apply published regression coefficients through a sigmoid.
Items whose inputs this schema cannot provide (e.g. proteinuria dipstick)
are bound "unavailable" and score zero -- the file records that policy so
reported performance is interpretable.

Every file carries a checksum over its canonical content; load_tool refuses
tables that fail verification.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
import yaml

from .cohort import Cohort
from .errors import MissingFeatureError, ToolTableError
from .metrics import auc_roc, compute_all, confusion

TOOL_IDS = ("SCORED", "KSHIRSAGAR", "SPS", "KEARNS", "KWON")


@dataclass(frozen=True)
class ToolItem:
    input: str
    binding: dict | str  # {"feature": ..., "category"|"map"/"default": ...} or "unavailable"
    points: Optional[dict | float] = None  # additive tools
    coefficient: Optional[float] = None  # logistic tools

    @property
    def available(self) -> bool:
        return self.binding != "unavailable"

    @property
    def feature(self) -> Optional[str]:
        return self.binding["feature"] if self.available else None


@dataclass(frozen=True)
class ClinicalTool:
    tool_id: str
    name: str
    citation: str
    kind: str  # "additive" | "logistic"
    items: tuple[ToolItem, ...]
    decision: dict
    categories: tuple[dict, ...] = ()  # ordered {label, max} cuts (SPS-style)
    intercept: float = 0.0
    notes: str = ""

    @property
    def required_features(self) -> tuple[str, ...]:
        seen: list[str] = []
        for it in self.items:
            f = it.feature
            if f is not None and f not in seen:
                seen.append(f)
        return tuple(seen)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(it.input for it in self.items)


@dataclass(frozen=True)
class ClinicalScoreResult:
    tool_id: str
    raw_score: float
    is_positive: bool
    category: Optional[str] = None
    unavailable_inputs: tuple[str, ...] = ()


def _item_weight(tool: ClinicalTool, item: ToolItem, patient: dict) -> float:
    if not item.available:
        return 0.0
    feature = item.binding["feature"]
    value = patient[feature]
    if "category" in item.binding:
        active = value == item.binding["category"]
        w = item.coefficient if tool.kind == "logistic" else item.points
        return float(w) if active else 0.0
    # banded item: schema category -> tool level -> weight
    level = item.binding.get("map", {}).get(value, item.binding.get("default"))
    table = item.points if tool.kind == "additive" else item.coefficient
    if not isinstance(table, dict):
        raise ToolTableError(f"{tool.tool_id}.{item.input}: banded item needs a weight map")
    return float(table.get(level, 0.0))


def score_clinical(tool: ClinicalTool, patient: dict) -> ClinicalScoreResult:
    """Score one patient (schema feature -> category mapping)."""
    missing = [
        f for f in tool.required_features if f not in patient or patient[f] is None
    ]
    if missing:
        raise MissingFeatureError(missing)
    total = tool.intercept if tool.kind == "logistic" else 0.0
    for item in tool.items:
        total += _item_weight(tool, item, patient)
    category = None
    if tool.kind == "logistic":
        raw = 1.0 / (1.0 + math.exp(-total))
        positive = raw >= float(tool.decision["threshold"])
    else:
        raw = total
        if tool.categories:
            category = tool.categories[-1]["label"]
            for cut in tool.categories:
                if "max" in cut and total <= float(cut["max"]):
                    category = cut["label"]
                    break
        if tool.decision.get("type") == "category-not":
            positive = category != tool.decision["value"]
        else:
            positive = raw >= float(tool.decision["threshold"])
    return ClinicalScoreResult(
        tool_id=tool.tool_id,
        raw_score=float(raw),
        is_positive=bool(positive),
        category=category,
        unavailable_inputs=tuple(it.input for it in tool.items if not it.available),
    )


def evaluate_tool(tool: ClinicalTool, cohort: Cohort) -> dict:
    """Point metrics of a tool's binary call on a labelled cohort.

    AUC ranks the tool's raw score; the other metrics use the binary call.
    """
    y_true = np.array(
        [1 if lab == cohort.schema.positive_label else 0 for lab in cohort.labels]
    )
    calls = np.empty(len(cohort), dtype=int)
    raws = np.empty(len(cohort), dtype=float)
    for i, row in enumerate(cohort.rows):
        r = score_clinical(tool, row)
        calls[i] = 1 if r.is_positive else 0
        raws[i] = r.raw_score
    c = confusion(y_true, calls)
    values, flags = compute_all(c)
    both_classes = 0 < y_true.sum() < len(y_true)
    if both_classes:
        values["auc_roc"] = auc_roc(y_true, raws)
    report = {
        "tool": tool.tool_id,
        "counts": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
        "metrics": values,
        "flags": flags,
        "n": len(cohort),
    }
    return report


# ----------------------------------------------------------------- loading

def _canonical_digest(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "checksum"}
    canon = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _tool_from_doc(doc: dict) -> ClinicalTool:
    recorded = doc.get("checksum", "")
    digest = _canonical_digest(doc)
    if recorded != f"sha256:{digest}":
        raise ToolTableError(
            f"{doc.get('tool_id', '?')}: checksum mismatch (table edited without re-stamping?)"
        )
    items = tuple(
        ToolItem(
            input=it["input"],
            binding=it["binding"],
            points=it.get("points"),
            coefficient=it.get("coefficient"),
        )
        for it in doc["items"]
    )
    return ClinicalTool(
        tool_id=doc["tool_id"],
        name=doc.get("name", doc["tool_id"]),
        citation=doc["citation"],
        kind=doc["kind"],
        items=items,
        decision=doc["decision"],
        categories=tuple(doc.get("categories", ())),
        intercept=float(doc.get("intercept", 0.0)),
        notes=doc.get("notes", ""),
    )


def load_tool(tool_id: str, path: Optional[str] = None) -> ClinicalTool:
    if path is None:
        if tool_id not in TOOL_IDS:
            raise ToolTableError(f"unknown tool {tool_id!r} (have {', '.join(TOOL_IDS)})")
        text = (
            resources.files("ckdscreen.data.tools")
            .joinpath(f"{tool_id.lower()}.yaml")
            .read_text()
        )
    else:
        with open(path) as fh:
            text = fh.read()
    return _tool_from_doc(yaml.safe_load(text))


def load_all_tools() -> dict[str, ClinicalTool]:
    return {tid: load_tool(tid) for tid in TOOL_IDS}


def stamp_checksum(path: str) -> str:
    """Recompute and write the checksum field of a tool table (maintenance)."""
    with open(path) as fh:
        doc = yaml.safe_load(fh.read())
    digest = f"sha256:{_canonical_digest(doc)}"
    doc["checksum"] = digest
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, allow_unicode=True)
    return digest
