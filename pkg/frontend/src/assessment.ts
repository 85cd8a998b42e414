// View model for one assessment: the service's numbers arranged for display.
// The only arithmetic performed here is the delta between two service
// probabilities; probabilities themselves are shown verbatim.

import { ExplainResponse } from "./types.js";

export interface ContributionRow {
  /** Model column name, e.g. "Hypertension" or "Age_60+y". */
  name: string;
  value: number;
  direction: "positive" | "negative" | "none";
}

export interface WhatIfRow {
  field: string;
  /** Category the what-if switched the field to. */
  value: string;
  newProbability: number;
  /** newProbability - probability; the one derived number in the view. */
  delta: number;
}

export interface AssessmentView {
  /** Verbatim service probability; format at render time, never earlier. */
  probability: number;
  isPositive: boolean;
  threshold: number;
  positiveLabel: string;
  negativeLabel: string;
  baseValue: number;
  /** Descending by |value|; ties keep the service's key order. */
  contributions: ContributionRow[];
  whatIf: WhatIfRow[];
}

export function orderContributions(contributions: Record<string, number>): ContributionRow[] {
  return Object.entries(contributions)
    .map(([name, value]): ContributionRow => ({
      name,
      value,
      direction: value > 0 ? "positive" : value < 0 ? "negative" : "none",
    }))
    .sort((a, b) => Math.abs(b.value) - Math.abs(a.value));
}

export function buildAssessmentView(
  explained: ExplainResponse,
  positiveLabel: string,
  negativeLabel: string,
): AssessmentView {
  return {
    probability: explained.probability,
    isPositive: explained.is_positive,
    threshold: explained.threshold,
    positiveLabel,
    negativeLabel,
    baseValue: explained.explanation.base_value,
    contributions: orderContributions(explained.explanation.contributions),
    whatIf: [],
  };
}

export function whatIfRow(
  view: AssessmentView,
  field: string,
  value: string,
  newProbability: number,
): WhatIfRow {
  return { field, value, newProbability, delta: newProbability - view.probability };
}

/** Replace-or-append by field: one live comparison per control. */
export function upsertWhatIf(view: AssessmentView, row: WhatIfRow): AssessmentView {
  const rest = view.whatIf.filter((r) => r.field !== row.field);
  return { ...view, whatIf: [...rest, row] };
}
