// Shared fetch stub: routes requests to canned fixture responses and logs
// every call so tests can assert on exactly what went over the wire.

import { FetchLike } from "../src/api.js";
import { PatientBody } from "../src/types.js";

export interface Route {
  method: "GET" | "POST";
  path: string;
  /** Optional body predicate; the first route whose predicate passes wins. */
  matches?: (body: PatientBody) => boolean;
  status: number;
  body: unknown;
  /** Resolve only after this promise settles (for in-flight timing tests). */
  gate?: Promise<void>;
}

export interface LoggedCall {
  method: string;
  path: string;
  body: PatientBody | null;
}

export interface FetchStub {
  fetch: FetchLike;
  calls: LoggedCall[];
}

export function stubFetch(routes: Route[]): FetchStub {
  const calls: LoggedCall[] = [];
  const impl: FetchLike = async (input, init) => {
    const path = new URL(input, "http://service.test").pathname;
    const method = (init?.method ?? "GET").toUpperCase();
    const body = init?.body ? (JSON.parse(String(init.body)) as PatientBody) : null;
    calls.push({ method, path, body });
    const route = routes.find(
      (r) => r.method === method && r.path === path && (!r.matches || (body !== null && r.matches(body))),
    );
    if (!route) {
      throw new TypeError(`no route for ${method} ${path} ${JSON.stringify(body)}`);
    }
    if (route.gate) {
      await route.gate;
    }
    return new Response(JSON.stringify(route.body), {
      status: route.status,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetch: impl, calls };
}

/** Fetch that never reaches a server. */
export function downFetch(): FetchLike {
  return async () => {
    throw new TypeError("fetch failed");
  };
}
