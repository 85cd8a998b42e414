// What-if engine: one toggled field per request, dedup per control.

import { describe, expect, test } from "vitest";

import { ScreeningClient } from "../src/api.js";
import { buildAssessmentView } from "../src/assessment.js";
import { ExplainResponse, PatientBody } from "../src/types.js";
import { WhatIfEngine } from "../src/whatif.js";
import { Route, stubFetch } from "./helpers.js";

import exemplarPatient from "./fixtures/exemplar_patient.json";
import explainExemplar from "./fixtures/explain_exemplar.json";
import predictExemplar from "./fixtures/predict_exemplar.json";
import predictWhatIf from "./fixtures/predict_whatif_hypertension_no.json";

const EXEMPLAR = exemplarPatient as PatientBody;
const EXPLAINED = explainExemplar as ExplainResponse;

function engineWith(routes: Route[]) {
  const stub = stubFetch(routes);
  const engine = new WhatIfEngine(new ScreeningClient("http://service.test", stub.fetch));
  const view = buildAssessmentView(EXPLAINED, "CKD", "non-CKD");
  return { engine, view, stub };
}

const WHATIF_ROUTES: Route[] = [
  {
    method: "POST",
    path: "/predict",
    matches: (body) => body["Hypertension"] === "No",
    status: 200,
    body: predictWhatIf,
  },
  { method: "POST", path: "/predict", status: 200, body: predictExemplar },
];

describe("WhatIfEngine", () => {
  test("turning Hypertension off lowers the displayed risk", async () => {
    const { engine, view } = engineWith(WHATIF_ROUTES);
    const row = await engine.compare(view, EXEMPLAR, "Hypertension", "No");
    expect(row.newProbability).toBe(predictWhatIf.probability);
    expect(row.newProbability).toBeLessThan(view.probability);
    expect(row.delta).toBeLessThan(0);
  });

  test("the request body differs from the submission in exactly one field", async () => {
    const { engine, view, stub } = engineWith(WHATIF_ROUTES);
    await engine.compare(view, EXEMPLAR, "Hypertension", "No");
    const sent = stub.calls[0]?.body as PatientBody;
    expect(sent["Hypertension"]).toBe("No");
    const unchanged = Object.keys(EXEMPLAR).filter((k) => k !== "Hypertension");
    for (const key of unchanged) {
      expect(sent[key]).toBe(EXEMPLAR[key]);
    }
  });

  test("toggling back to the submitted value returns a zero delta", async () => {
    const { engine, view } = engineWith(WHATIF_ROUTES);
    const away = await engine.compare(view, EXEMPLAR, "Hypertension", "No");
    expect(away.delta).not.toBe(0);
    const back = await engine.compare(view, EXEMPLAR, "Hypertension", "Yes");
    expect(back.newProbability).toBe(view.probability);
    expect(back.delta).toBe(0);
  });

  test("concurrent what-ifs on one field share a single request", async () => {
    let release!: () => void;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const { engine, view, stub } = engineWith([
      { ...WHATIF_ROUTES[0]!, gate },
      WHATIF_ROUTES[1]!,
    ]);
    const first = engine.compare(view, EXEMPLAR, "Hypertension", "No");
    const second = engine.compare(view, EXEMPLAR, "Hypertension", "No");
    expect(engine.pendingFields).toEqual(["Hypertension"]);
    release();
    const [a, b] = await Promise.all([first, second]);
    expect(stub.calls).toHaveLength(1);
    expect(a).toBe(b);
    expect(engine.pendingFields).toEqual([]);
  });

  test("different fields run independently", async () => {
    const { engine, view, stub } = engineWith(WHATIF_ROUTES);
    await Promise.all([
      engine.compare(view, EXEMPLAR, "Hypertension", "No"),
      engine.compare(view, EXEMPLAR, "Diabetes", "Yes"),
    ]);
    expect(stub.calls).toHaveLength(2);
  });

  test("a settled field can be asked again with a fresh request", async () => {
    const { engine, view, stub } = engineWith(WHATIF_ROUTES);
    await engine.compare(view, EXEMPLAR, "Hypertension", "No");
    await engine.compare(view, EXEMPLAR, "Hypertension", "No");
    expect(stub.calls).toHaveLength(2);
  });
});
