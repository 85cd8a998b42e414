// Thin typed client over fetch.  Every number the UI shows comes out of
// these three calls; there is no model math on this side of the wire.

import {
  ExplainResponse,
  MalformedErrorBody,
  PatientBody,
  PredictResponse,
  SchemaResponse,
  isValidationBody,
} from "./types.js";

/** The service rejected the body at field level (HTTP 422). */
export class FieldValidationError extends Error {
  readonly missing: string[];
  readonly fields: string[];

  constructor(message: string, missing: string[] = [], fields: string[] = []) {
    super(message);
    this.name = "FieldValidationError";
    this.missing = missing;
    this.fields = fields;
  }
}

/** The request itself was malformed (HTTP 400) — a client bug, not bad input. */
export class MalformedRequestError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MalformedRequestError";
  }
}

/** Network failure or non-HTTP response: show the offline state, offer retry. */
export class ServiceUnreachableError extends Error {
  constructor(cause: unknown) {
    super(cause instanceof Error ? cause.message : String(cause));
    this.name = "ServiceUnreachableError";
  }
}

async function errorFromResponse(res: Response): Promise<Error> {
  let body: unknown;
  try {
    body = await res.json();
  } catch {
    return new ServiceUnreachableError(`unexpected ${res.status} response`);
  }
  if (res.status === 422 && isValidationBody(body)) {
    const detail = body.detail;
    return new FieldValidationError(detail.error, detail.missing ?? [], detail.fields ?? []);
  }
  if (res.status === 400) {
    return new MalformedRequestError(String((body as MalformedErrorBody).detail));
  }
  return new ServiceUnreachableError(`unexpected ${res.status} response`);
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ScreeningClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchImpl(this.baseUrl + path, init);
    } catch (cause) {
      throw new ServiceUnreachableError(cause);
    }
    if (!res.ok) {
      throw await errorFromResponse(res);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, patient: PatientBody): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(patient),
    });
  }

  getSchema(): Promise<SchemaResponse> {
    return this.request<SchemaResponse>("/schema");
  }

  predict(patient: PatientBody): Promise<PredictResponse> {
    return this.post<PredictResponse>("/predict", patient);
  }

  explain(patient: PatientBody): Promise<ExplainResponse> {
    return this.post<ExplainResponse>("/explain", patient);
  }
}
