/** Typed client for the monitoring service. All numbers shown anywhere in
 * the console come from these responses; the client never computes
 * probabilities itself. */

import type {
  ApiErrorBody,
  BoundaryTableResponse,
  CalibrateResponse,
  DecisionResponse,
  HealthResponse,
  OCResponse,
  StateBody,
  TrialConfigJson,
  WhatIfResponse,
} from "./types.js";

/** Non-2xx response carrying the service's flat {code, message, details}. */
export class ApiError extends Error {
  readonly code: string;
  readonly details: Record<string, unknown>;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.details = body.details ?? {};
  }
}

/** The service could not be reached at all (network failure, bad JSON). */
export class ServiceUnreachableError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ServiceUnreachableError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  async health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("GET", "/api/v1/health");
  }

  async decision(
    config: TrialConfigJson,
    state: StateBody,
  ): Promise<DecisionResponse> {
    return this.request<DecisionResponse>("POST", "/api/v1/decision", {
      config,
      state,
    });
  }

  async whatif(
    config: TrialConfigJson,
    state: StateBody,
    horizon: number,
  ): Promise<WhatIfResponse> {
    return this.request<WhatIfResponse>("POST", "/api/v1/whatif", {
      config,
      state,
      horizon,
    });
  }

  async boundaryTable(
    config: TrialConfigJson,
    nMax: number,
  ): Promise<BoundaryTableResponse> {
    return this.request<BoundaryTableResponse>(
      "POST",
      "/api/v1/boundary-table",
      { config, nMax },
    );
  }

  async oc(
    config: TrialConfigJson,
    theta1: number[],
    theta2: number[],
  ): Promise<OCResponse> {
    return this.request<OCResponse>("POST", "/api/v1/oc", {
      config,
      theta1,
      theta2,
    });
  }

  async calibrate(
    config: TrialConfigJson,
    targetAlpha: number,
    theta2?: number,
  ): Promise<CalibrateResponse> {
    const body: Record<string, unknown> = { config, targetAlpha };
    if (theta2 !== undefined) body.theta2 = theta2;
    return this.request<CalibrateResponse>("POST", "/api/v1/calibrate", body);
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, {
        method,
        headers:
          body === undefined
            ? undefined
            : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceUnreachableError(
        `service unreachable at ${this.base}: ${String(err)}`,
      );
    }
    let payload: unknown;
    try {
      payload = await response.json();
    } catch {
      throw new ServiceUnreachableError(
        `service at ${this.base} returned a non-JSON body (HTTP ${response.status})`,
      );
    }
    if (!response.ok) {
      const err = payload as Partial<ApiErrorBody>;
      throw new ApiError(response.status, {
        code: typeof err.code === "string" ? err.code : "unknown_error",
        message:
          typeof err.message === "string"
            ? err.message
            : `HTTP ${response.status}`,
        details: err.details,
      });
    }
    return payload as T;
  }
}

/** Human-readable feasible interval from an infeasible_prior 422 payload. */
export function feasibleRhoInterval(err: ApiError): [number, number] | null {
  const box = err.details["feasibleRho"];
  if (box && typeof box === "object") {
    const { lo, hi } = box as { lo?: unknown; hi?: unknown };
    if (typeof lo === "number" && typeof hi === "number") return [lo, hi];
  }
  return null;
}
