/**
 * Typed client for the retouching service. All images travel as
 * base64-encoded PNG strings inside JSON.
 */

export interface RetouchRequest {
  image: string;
  mode: "manual" | "auto";
  delta?: number[];
  return_weights?: boolean;
}

export interface RetouchResponse {
  image: string;
  text: string;
  attributes_in: number[];
  predicted_target: number[] | null;
  weight_maps: string[] | null;
}

export interface AttributeEntry {
  raw: number;
  level: number;
}

export interface AttributesResponse {
  attributes: Record<string, AttributeEntry>;
  levels: number[];
}

export interface ServiceConfig {
  model: Record<string, unknown>;
  attributes: string[];
  terms: string[][];
  template: string;
  delta_range: [number, number];
  delta_step: number;
  max_image_bytes: number;
  has_predictor: boolean;
}

/** A 4xx from the service: a message plus the offending field. */
export class ApiError extends Error {
  readonly field: string;
  readonly status: number;

  constructor(message: string, field: string, status: number) {
    super(message);
    this.field = field;
    this.status = status;
  }
}

/** The service could not be reached at all (network down, wrong URL). */
export class ServiceUnreachable extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${cause instanceof Error ? cause.message : cause}`);
  }
}

async function parseFailure(res: Response): Promise<never> {
  let body: { error?: string; field?: string } = {};
  try {
    body = await res.json();
  } catch {
    // non-JSON failure body; fall through to the generic message
  }
  throw new ApiError(
    body.error ?? `request failed with status ${res.status}`,
    body.field ?? "request",
    res.status,
  );
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.baseUrl + path, init);
    } catch (err) {
      throw new ServiceUnreachable(err);
    }
    if (!res.ok) await parseFailure(res);
    return (await res.json()) as T;
  }

  retouch(req: RetouchRequest): Promise<RetouchResponse> {
    return this.request<RetouchResponse>("/retouch", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  attributes(imageB64: string): Promise<AttributesResponse> {
    return this.request<AttributesResponse>(
      `/attributes?image=${encodeURIComponent(imageB64)}`,
    );
  }

  config(): Promise<ServiceConfig> {
    return this.request<ServiceConfig>("/config");
  }

  health(): Promise<{ status: string; model_config: Record<string, unknown> }> {
    return this.request("/health");
  }
}
