// DOM shell: wires the schema-driven form, the assessment view, and the
// what-if engine together.  Native controls throughout (labelled selects
// and radios), so keyboard operation comes for free; risk is always shown
// as number + words, never color alone.

import { FieldValidationError, ScreeningClient } from "./api.js";
import { AssessmentView, buildAssessmentView, upsertWhatIf } from "./assessment.js";
import { FormModel } from "./form.js";
import { Lang, t } from "./strings.js";
import { PatientBody, SchemaResponse } from "./types.js";
import { WhatIfEngine } from "./whatif.js";

export interface AppHandles {
  form: FormModel | null;
  refresh: () => Promise<void>;
  submit: () => Promise<void>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function formatPercent(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}

function formatSigned(v: number): string {
  return `${v >= 0 ? "+" : ""}${v.toFixed(4)}`;
}

export function initApp(root: HTMLElement, client: ScreeningClient, lang: Lang = "en"): AppHandles {
  root.replaceChildren();
  const heading = el("h1", {}, t("title", lang));
  const status = el("p", { role: "status", "aria-live": "polite", class: "status" });
  const formSection = el("form", { class: "screening-form" });
  const resultSection = el("section", { class: "result", "aria-live": "polite" });
  root.append(heading, status, formSection, resultSection);
  formSection.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit();
  });

  const handles: AppHandles = {
    form: null,
    refresh: async () => loadSchema(),
    submit: async () => submit(),
  };
  let schema: SchemaResponse | null = null;
  let engine: WhatIfEngine | null = null;
  let view: AssessmentView | null = null;
  let submitted: PatientBody | null = null;

  function renderUnreachable(): void {
    status.textContent = t("unreachable", lang);
    formSection.replaceChildren();
    const retry = el("button", { type: "button" }, t("retry", lang));
    retry.addEventListener("click", () => void loadSchema());
    formSection.append(retry);
  }

  function syncSubmitGate(): void {
    const button = formSection.querySelector<HTMLButtonElement>("button[type=submit]");
    if (!button || !handles.form) {
      return;
    }
    button.disabled = !handles.form.canSubmit;
    status.textContent = handles.form.canSubmit ? "" : t("formIncomplete", lang);
  }

  function renderFieldIssues(): void {
    if (!handles.form) {
      return;
    }
    // feature names contain "<" and spaces, so match attributes in JS
    // instead of building CSS selector strings
    for (const slot of formSection.querySelectorAll("[data-issues-for]")) {
      const name = slot.getAttribute("data-issues-for") ?? "";
      const issues = handles.form.issuesFor(name);
      slot.textContent = issues
        .map((issue) => t(issue.kind === "missing" ? "fieldMissing" : "fieldRejected", lang))
        .join(" ");
    }
  }

  function renderForm(): void {
    if (!schema || !handles.form) {
      return;
    }
    formSection.replaceChildren();
    if (handles.form.fields.length === 0) {
      status.textContent = t("emptySchema", lang);
      return;
    }
    for (const field of handles.form.fields) {
      const wrap = el("div", { class: "field", "data-field": field.name });
      const label = el("label", { for: `f-${field.name}` }, field.name);
      wrap.append(label);
      if (field.hint) {
        wrap.append(el("small", { class: "hint" }, field.hint));
      }
      // one control per feature; a blank leading option keeps the field
      // unset until the worker makes an explicit choice
      const select = el("select", { id: `f-${field.name}`, name: field.name });
      select.append(el("option", { value: "" }, "—"));
      for (const option of field.options) {
        select.append(el("option", { value: option }, option));
      }
      select.addEventListener("change", () => {
        if (select.value === "") {
          handles.form?.clearValue(field.name);
        } else {
          handles.form?.setValue(field.name, select.value);
        }
        renderFieldIssues();
        syncSubmitGate();
      });
      wrap.append(select, el("span", { class: "issues", "data-issues-for": field.name }));
      formSection.append(wrap);
    }
    const button = el("button", { type: "submit" }, t("submit", lang));
    formSection.append(button);
    syncSubmitGate();
  }

  function renderResult(): void {
    resultSection.replaceChildren();
    if (!view) {
      return;
    }
    resultSection.append(el("h2", {}, t("riskHeading", lang)));
    const call = view.isPositive ? t("riskPositive", lang) : t("riskNegative", lang);
    resultSection.append(el("p", { class: "call" }, `${call} (${view.isPositive ? view.positiveLabel : view.negativeLabel})`));
    const probability = el("p", { class: "probability" });
    probability.append(
      el("span", {}, `${t("probabilityLabel", lang)}: ${formatPercent(view.probability)} `),
      // the untruncated service number stays in the document so the display
      // is auditable against the wire response
      el("code", { class: "probability-raw" }, String(view.probability)),
    );
    resultSection.append(probability);
    resultSection.append(
      el("p", {}, `${t("thresholdNote", lang)}: ${formatPercent(view.threshold)}`),
      el("p", {}, `${t("baseValueLabel", lang)}: ${formatPercent(view.baseValue)}`),
    );

    resultSection.append(el("h3", {}, t("contributionsHeading", lang)));
    const list = el("ol", { class: "contributions" });
    for (const row of view.contributions) {
      const item = el("li", { "data-contribution": row.name });
      const width = Math.round(Math.abs(row.value) * 200);
      const bar = el("span", {
        class: `bar ${row.direction}`,
        style: `width:${width}px`,
        "aria-hidden": "true",
      });
      const words =
        row.direction === "positive"
          ? t("pushesUp", lang)
          : row.direction === "negative"
            ? t("pushesDown", lang)
            : "";
      item.append(
        el("span", { class: "name" }, row.name),
        el("span", { class: "value" }, formatSigned(row.value)),
        bar,
        el("span", { class: "direction" }, words),
      );
      list.append(item);
    }
    resultSection.append(list);

    resultSection.append(el("h3", {}, t("whatIfHeading", lang)), el("p", {}, t("whatIfHint", lang)));
    const whatIfList = el("ul", { class: "whatif" });
    for (const row of view.whatIf) {
      whatIfList.append(
        el(
          "li",
          { "data-whatif": row.field },
          `${row.field} → ${row.value}: ${formatPercent(row.newProbability)} (${formatSigned(row.delta)} ${t("whatIfDelta", lang)})`,
        ),
      );
    }
    resultSection.append(whatIfList);

    if (schema && handles.form && submitted) {
      const controls = el("div", { class: "whatif-controls" });
      for (const field of handles.form.fields) {
        const current = submitted[field.name];
        for (const option of field.options) {
          if (option === current) {
            continue;
          }
          const button = el(
            "button",
            { type: "button", "data-whatif-toggle": `${field.name}=${option}` },
            `${field.name}: ${option}?`,
          );
          button.addEventListener("click", () => void runWhatIf(field.name, option));
          controls.append(button);
        }
      }
      resultSection.append(controls);
    }
  }

  async function runWhatIf(field: string, value: string): Promise<void> {
    if (!engine || !view || !submitted) {
      return;
    }
    try {
      const row = await engine.compare(view, submitted, field, value);
      view = upsertWhatIf(view, row);
      renderResult();
    } catch {
      status.textContent = t("unreachable", lang);
    }
  }

  async function submit(): Promise<void> {
    if (!schema || !handles.form || !handles.form.canSubmit) {
      return;
    }
    submitted = handles.form.toRequestBody();
    try {
      const explained = await client.explain(submitted);
      view = buildAssessmentView(explained, schema.positive_label, schema.negative_label);
      renderResult();
    } catch (err) {
      if (err instanceof FieldValidationError) {
        handles.form.applyServiceIssues(err.missing, err.fields);
        renderFieldIssues();
        status.textContent = err.message;
        return;
      }
      status.textContent = t("unreachable", lang);
    }
  }

  async function loadSchema(): Promise<void> {
    status.textContent = t("loadingSchema", lang);
    try {
      schema = await client.getSchema();
    } catch {
      renderUnreachable();
      return;
    }
    handles.form = new FormModel(schema);
    engine = new WhatIfEngine(client);
    status.textContent = "";
    renderForm();
  }

  void loadSchema();
  return handles;
}

// Browser entry point; tests call initApp directly instead.
if (typeof document !== "undefined" && document.getElementById("screening-root")) {
  const root = document.getElementById("screening-root") as HTMLElement;
  const base = root.dataset.serviceUrl ?? "http://127.0.0.1:8000";
  initApp(root, new ScreeningClient(base));
}
