// JSON contracts of the screening service (GET /schema, POST /predict,
// POST /explain).  These mirror the wire format exactly; nothing here is
// computed client-side.

/** One feature as the service describes it: pick exactly one category. */
export interface ServiceFeature {
  name: string;
  kind: "binary" | "categorical";
  /** Questionnaire section the feature belongs to (SD, LH, MH, CE, Path). */
  group: string;
  categories: string[];
  /** Optional plain-language hint; empty string when the name is enough. */
  description: string;
}

/** GET /schema — everything the form needs to render and validate itself. */
export interface SchemaResponse {
  schema_hash: string;
  schema_version: number;
  label_name: string;
  positive_label: string;
  negative_label: string;
  feature_set: string;
  threshold: number;
  features: ServiceFeature[];
}

/** Request body for /predict and /explain: feature name -> chosen category. */
export type PatientBody = Record<string, string>;

/** POST /predict — the risk call. */
export interface PredictResponse {
  probability: number;
  is_positive: boolean;
  threshold: number;
  model: { kind: string; feature_set: string };
}

/**
 * Additive decomposition: base_value + sum(contributions) equals
 * output_value, which equals the /predict probability for the same body.
 * Keys are model columns (e.g. "Age_60+y"), not always raw feature names.
 */
export interface ExplanationPayload {
  base_value: number;
  contributions: Record<string, number>;
  output_value: number;
  output_space: string;
  method: string;
}

/** POST /explain — /predict plus the decomposition. */
export interface ExplainResponse extends PredictResponse {
  explanation: ExplanationPayload;
}

/** 422 body: field-level validation the UI can map back onto controls. */
export interface ValidationDetail {
  error: string;
  /** Required features absent from the body. */
  missing?: string[];
  /** Features whose category the service rejected. */
  fields?: string[];
}

export interface ValidationErrorBody {
  detail: ValidationDetail;
}

/** 400 body: the request itself was malformed (not a JSON object). */
export interface MalformedErrorBody {
  detail: string;
}

export function isValidationBody(body: unknown): body is ValidationErrorBody {
  return (
    typeof body === "object" &&
    body !== null &&
    typeof (body as ValidationErrorBody).detail === "object" &&
    (body as ValidationErrorBody).detail !== null &&
    typeof (body as ValidationErrorBody).detail.error === "string"
  );
}
