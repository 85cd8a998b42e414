// Full shell against recorded service bodies: form gating, verbatim risk
// display, contribution ordering, what-if rows, and the unreachable state.

import { beforeEach, describe, expect, test } from "vitest";

import { ScreeningClient } from "../src/api.js";
import { AppHandles, initApp } from "../src/app.js";
import { PatientBody } from "../src/types.js";
import { Route, downFetch, stubFetch } from "./helpers.js";

import errorMissingField from "./fixtures/error_missing_field.json";
import exemplarPatient from "./fixtures/exemplar_patient.json";
import explainExemplar from "./fixtures/explain_exemplar.json";
import predictWhatIf from "./fixtures/predict_whatif_hypertension_no.json";
import schemaFixture from "./fixtures/schema.json";

const EXEMPLAR = exemplarPatient as PatientBody;

const HAPPY_ROUTES: Route[] = [
  { method: "GET", path: "/schema", status: 200, body: schemaFixture },
  { method: "POST", path: "/explain", status: 200, body: explainExemplar },
  {
    method: "POST",
    path: "/predict",
    matches: (body) => body["Hypertension"] === "No",
    status: 200,
    body: predictWhatIf,
  },
];

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.append(root);
});

async function mount(routes: Route[]): Promise<AppHandles> {
  const { fetch } = stubFetch(routes);
  const handles = initApp(root, new ScreeningClient("http://service.test", fetch));
  await handles.refresh();
  return handles;
}

function fillForm(values: PatientBody, skip: string[] = []): void {
  for (const [field, value] of Object.entries(values)) {
    if (skip.includes(field)) {
      continue;
    }
    const select = root.querySelector<HTMLSelectElement>(`#${CSS.escape(`f-${field}`)}`)
      ?? [...root.querySelectorAll("select")].find((s) => s.name === field);
    if (!select) {
      throw new Error(`no control for ${field}`);
    }
    select.value = value;
    select.dispatchEvent(new Event("change"));
  }
}

function submitButton(): HTMLButtonElement {
  const button = root.querySelector<HTMLButtonElement>("button[type=submit]");
  if (!button) {
    throw new Error("no submit button");
  }
  return button;
}

describe("form rendering", () => {
  test("one labelled control per schema feature", async () => {
    await mount(HAPPY_ROUTES);
    const selects = root.querySelectorAll("form select");
    expect(selects).toHaveLength(schemaFixture.features.length);
    for (const feature of schemaFixture.features) {
      const label = [...root.querySelectorAll("label")].find((l) => l.textContent === feature.name);
      expect(label, feature.name).toBeDefined();
    }
  });

  test("an empty schema shows the error state and no submit button", async () => {
    await mount([
      { method: "GET", path: "/schema", status: 200, body: { ...schemaFixture, features: [] } },
    ]);
    expect(root.querySelector("button[type=submit]")).toBeNull();
    expect(root.querySelector(".status")?.textContent).toContain("no questions");
  });

  test("schema fetch failure offers a retry that recovers", async () => {
    const handles = initApp(root, new ScreeningClient("http://service.test", downFetch()));
    await handles.refresh();
    const retry = root.querySelector<HTMLButtonElement>("form button");
    expect(retry?.textContent).toBe("Try again");
    expect(root.querySelector(".status")?.textContent).toContain("Cannot reach");

    // service comes back: same shell, fresh client
    const { fetch } = stubFetch(HAPPY_ROUTES);
    const recovered = initApp(root, new ScreeningClient("http://service.test", fetch));
    await recovered.refresh();
    expect(root.querySelectorAll("form select").length).toBeGreaterThan(0);
  });
});

describe("submit gating", () => {
  test("submit stays disabled until the last field is answered", async () => {
    await mount(HAPPY_ROUTES);
    expect(submitButton().disabled).toBe(true);
    fillForm(EXEMPLAR, ["RBC"]);
    expect(submitButton().disabled).toBe(true);
    fillForm({ RBC: EXEMPLAR["RBC"]! });
    expect(submitButton().disabled).toBe(false);
  });

  test("clearing an answered field re-disables submission", async () => {
    await mount(HAPPY_ROUTES);
    fillForm(EXEMPLAR);
    expect(submitButton().disabled).toBe(false);
    const gender = [...root.querySelectorAll("select")].find((s) => s.name === "Gender")!;
    gender.value = "";
    gender.dispatchEvent(new Event("change"));
    expect(submitButton().disabled).toBe(true);
  });
});

describe("assessment rendering", () => {
  test("the referral shows the service probability verbatim", async () => {
    const handles = await mount(HAPPY_ROUTES);
    fillForm(EXEMPLAR);
    await handles.submit();
    const raw = root.querySelector(".probability-raw");
    expect(raw?.textContent).toBe(String(explainExemplar.probability));
    expect(root.querySelector(".call")?.textContent).toContain("Refer");
    expect(root.querySelector(".call")?.textContent).toContain("CKD");
  });

  test("contribution rows lead with Age_60+y and Hypertension, both positive", async () => {
    const handles = await mount(HAPPY_ROUTES);
    fillForm(EXEMPLAR);
    await handles.submit();
    const rows = [...root.querySelectorAll(".contributions li")];
    const names = rows.map((r) => r.getAttribute("data-contribution"));
    expect(new Set(names.slice(0, 2))).toEqual(new Set(["Age_60+y", "Hypertension"]));
    for (const row of rows.slice(0, 2)) {
      expect(row.querySelector(".value")?.textContent).toMatch(/^\+/);
      expect(row.querySelector(".direction")?.textContent).toBe("raises the risk estimate");
    }
  });

  test("risk is conveyed as number plus words, not color alone", async () => {
    const handles = await mount(HAPPY_ROUTES);
    fillForm(EXEMPLAR);
    await handles.submit();
    const bars = root.querySelectorAll(".contributions .bar");
    for (const bar of bars) {
      expect(bar.getAttribute("aria-hidden")).toBe("true");
    }
    expect(root.querySelector(".probability")?.textContent).toContain("%");
  });
});

describe("what-if", () => {
  test("toggling Hypertension to No renders a strictly lower risk", async () => {
    const handles = await mount(HAPPY_ROUTES);
    fillForm(EXEMPLAR);
    await handles.submit();
    const toggle = root.querySelector<HTMLButtonElement>('[data-whatif-toggle="Hypertension=No"]');
    expect(toggle).not.toBeNull();
    toggle!.click();
    await flush();
    const row = root.querySelector('[data-whatif="Hypertension"]');
    expect(row?.textContent).toContain("Hypertension → No");
    expect(row?.textContent).toContain(`${(predictWhatIf.probability * 100).toFixed(1)}%`);
    expect(row?.textContent).toMatch(/\(-0\.\d+/);
    expect(predictWhatIf.probability).toBeLessThan(explainExemplar.probability);
  });
});

describe("service-side validation on submit", () => {
  test("a 422 lands next to the named control", async () => {
    const handles = await mount([
      { method: "GET", path: "/schema", status: 200, body: schemaFixture },
      { method: "POST", path: "/explain", status: 422, body: errorMissingField },
    ]);
    fillForm(EXEMPLAR);
    await handles.submit();
    const slot = [...root.querySelectorAll("[data-issues-for]")].find(
      (s) => s.getAttribute("data-issues-for") === "Anemia",
    );
    expect(slot?.textContent).toBe("This answer is required.");
    expect(root.querySelector(".status")?.textContent).toContain("Anemia");
  });
});
