// What-if comparisons: re-ask the service with exactly one field changed
// and report the probability shift.  No client-side model math — the delta
// is the difference of two service responses.

import { ScreeningClient } from "./api.js";
import { AssessmentView, WhatIfRow, whatIfRow } from "./assessment.js";
import { PatientBody } from "./types.js";

export class WhatIfEngine {
  private readonly client: ScreeningClient;
  /** One in-flight request per field; repeat clicks await the same promise. */
  private readonly inFlight = new Map<string, Promise<WhatIfRow>>();

  constructor(client: ScreeningClient) {
    this.client = client;
  }

  /**
   * Probability if `field` were `value`, everything else as submitted.
   *
   * Concurrent calls for the same field are deduplicated: the caller gets
   * the promise already in flight, so a double-click cannot race two
   * requests for one control.
   */
  compare(
    view: AssessmentView,
    submitted: PatientBody,
    field: string,
    value: string,
  ): Promise<WhatIfRow> {
    const pending = this.inFlight.get(field);
    if (pending) {
      return pending;
    }
    const run = this.client
      .predict({ ...submitted, [field]: value })
      .then((res) => whatIfRow(view, field, value, res.probability))
      .finally(() => {
        this.inFlight.delete(field);
      });
    this.inFlight.set(field, run);
    return run;
  }

  get pendingFields(): string[] {
    return [...this.inFlight.keys()];
  }
}
