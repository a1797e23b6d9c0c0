/** Thin fetch wrapper around the flightrag JSON API. */

import type { AskRequest, AskResponse } from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

/** Transport failure (DNS, refused connection, aborted). Retryable. */
export class NetworkError extends Error {
  constructor(detail: string) {
    super(`network error: ${detail}`);
    this.name = "NetworkError";
  }
}

/** The service is up but the model behind it is not (HTTP 503). */
export class ServiceUnavailableError extends Error {
  constructor() {
    super("model unavailable");
    this.name = "ServiceUnavailableError";
  }
}

/** Any other non-2xx response. */
export class ApiError extends Error {
  readonly status: number;
  constructor(status: number, detail: string) {
    super(`request failed (${status}): ${detail}`);
    this.name = "ApiError";
    this.status = status;
  }
}

export interface FlightRow {
  [field: string]: string;
}

export class FlightRagClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? (globalThis.fetch as unknown as FetchLike);
  }

  async ask(request: AskRequest): Promise<AskResponse> {
    let response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/v1/ask`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
      });
    } catch (err) {
      throw new NetworkError(err instanceof Error ? err.message : String(err));
    }
    if (response.status === 503) {
      throw new ServiceUnavailableError();
    }
    if (!response.ok) {
      let detail = "";
      try {
        detail = JSON.stringify(await response.json());
      } catch {
        detail = "unreadable body";
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as AskResponse;
  }

  async health(): Promise<{ status: string; flights: number }> {
    let response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/v1/health`);
    } catch (err) {
      throw new NetworkError(err instanceof Error ? err.message : String(err));
    }
    if (!response.ok) {
      throw new ApiError(response.status, "health check failed");
    }
    return (await response.json()) as { status: string; flights: number };
  }
}
