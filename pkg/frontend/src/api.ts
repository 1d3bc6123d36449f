// Thin client over the service API with injectable fetch for tests.

import type {
  AdaptResponse,
  ApiErrorBody,
  HandbookMeta,
  QueryInput,
  QueryPayload,
  SessionRecord,
} from "./types.js";

export const DEFAULT_SITUATION = "normal status";
export const DEFAULT_ORIGIN = "california";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, detail: string) {
    super(detail);
    this.status = status;
    this.code = code;
  }
}

/** Fill defaults the way the pipeline expects: a blank unexpected
 * situation always submits as "normal status". */
export function buildQuery(input: QueryInput): QueryPayload {
  const situation = (input.unexpected_situation ?? "").trim();
  const origin = (input.origin_jurisdiction ?? "").trim();
  return {
    origin_jurisdiction: origin.length > 0 ? origin : DEFAULT_ORIGIN,
    target_jurisdiction: input.target_jurisdiction,
    nominal_plan: input.nominal_plan,
    scene_description: input.scene_description ?? "",
    unexpected_situation: situation.length > 0 ? situation : DEFAULT_SITUATION,
    output_language: input.output_language ?? "en",
  };
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class Client {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, "network", String(err));
    }
    if (!response.ok) {
      let body: ApiErrorBody = { code: "unknown", detail: response.statusText };
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        // non-JSON error body; keep the fallback
      }
      throw new ApiError(response.status, body.code ?? "unknown", body.detail ?? "");
    }
    return (await response.json()) as T;
  }

  async listHandbooks(): Promise<HandbookMeta[]> {
    const body = await this.request<{ handbooks: HandbookMeta[] }>("/v1/handbooks");
    return body.handbooks;
  }

  adapt(input: QueryInput): Promise<AdaptResponse> {
    return this.request<AdaptResponse>("/v1/adapt", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(buildQuery(input)),
    });
  }

  getSession(traceId: string): Promise<SessionRecord> {
    return this.request<SessionRecord>(
      `/v1/sessions/${encodeURIComponent(traceId)}`,
    );
  }
}

/** Human messages for the API error codes, keyed for inline placement. */
export function describeError(err: unknown): { field: string; message: string } {
  if (!(err instanceof ApiError)) {
    return { field: "form", message: "Something went wrong. Please try again." };
  }
  if (err.code === "unknown_jurisdiction") {
    return { field: "target", message: "No handbook for that jurisdiction." };
  }
  if (err.code.startsWith("missing_field:")) {
    const field = err.code.split(":", 2)[1] ?? "form";
    return {
      field: field === "nominal_plan" ? "plan" : "form",
      message: "This field is required.",
    };
  }
  if (err.code === "unknown_session") {
    return { field: "history", message: "Session expired." };
  }
  if (err.code === "timeout") {
    return { field: "form", message: "The assistant timed out. Try again." };
  }
  if (err.code === "backend_failure") {
    return { field: "form", message: "The assistant is unavailable right now." };
  }
  if (err.code === "network") {
    return { field: "form", message: "You appear to be offline." };
  }
  return { field: "form", message: err.message || "Request failed." };
}
