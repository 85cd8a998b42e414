// Schema-driven form state.  The service's /schema payload is the single
// source of truth: one control per feature, options verbatim from the
// payload, and submission stays blocked until every feature has a choice.

import { PatientBody, SchemaResponse, ServiceFeature } from "./types.js";

/** What a renderer needs to draw one control. */
export interface FormField {
  name: string;
  /** Binary features render as a pair of radio options, others as a select. */
  control: "radio-pair" | "select";
  options: string[];
  group: string;
  /** Hint text under the label; empty string means none. */
  hint: string;
  required: true;
}

export function buildFields(schema: SchemaResponse): FormField[] {
  return schema.features.map((feature: ServiceFeature) => ({
    name: feature.name,
    control: feature.kind === "binary" ? "radio-pair" : "select",
    options: [...feature.categories],
    group: feature.group,
    hint: feature.description,
    required: true,
  }));
}

export interface FieldIssue {
  field: string;
  kind: "missing" | "rejected";
}

/**
 * Selections plus validation state for one screening form.
 *
 * Every feature the schema lists is required — the model cannot score a
 * patient with a gap — so completeness is simply "every field has a value
 * drawn from its own options".
 */
export class FormModel {
  readonly fields: FormField[];
  private readonly selections = new Map<string, string>();
  /** Field-level issues reported back by the service (422 responses). */
  private serviceIssues: FieldIssue[] = [];

  constructor(schema: SchemaResponse) {
    this.fields = buildFields(schema);
  }

  setValue(field: string, value: string): void {
    const spec = this.fields.find((f) => f.name === field);
    if (!spec) {
      throw new Error(`unknown field: ${field}`);
    }
    if (!spec.options.includes(value)) {
      throw new Error(`${field}: ${JSON.stringify(value)} is not an option`);
    }
    this.selections.set(field, value);
    // a fresh choice supersedes whatever the service said about this field
    this.serviceIssues = this.serviceIssues.filter((issue) => issue.field !== field);
  }

  clearValue(field: string): void {
    this.selections.delete(field);
  }

  getValue(field: string): string | undefined {
    return this.selections.get(field);
  }

  missingFields(): string[] {
    return this.fields.map((f) => f.name).filter((name) => !this.selections.has(name));
  }

  /** Submit gate: false while any field is unset. */
  get canSubmit(): boolean {
    return this.missingFields().length === 0;
  }

  /** Body for /predict and /explain, in schema order. */
  toRequestBody(): PatientBody {
    const body: PatientBody = {};
    for (const field of this.fields) {
      const value = this.selections.get(field.name);
      if (value === undefined) {
        throw new Error(`form incomplete: ${field.name} is unset`);
      }
      body[field.name] = value;
    }
    return body;
  }

  /** Map a 422 response onto controls so errors land next to their inputs. */
  applyServiceIssues(missing: string[], rejected: string[]): void {
    this.serviceIssues = [
      ...missing.map((field): FieldIssue => ({ field, kind: "missing" })),
      ...rejected.map((field): FieldIssue => ({ field, kind: "rejected" })),
    ];
  }

  issuesFor(field: string): FieldIssue[] {
    return this.serviceIssues.filter((issue) => issue.field === field);
  }
}
