/** Thin API client. Predict calls are latest-wins: firing a new one aborts
 * any still in flight, so rapid form edits never race. */

import type { MetaResponse, PredictRequest, PredictResponse, RecordsResponse } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function readError(response: Response): Promise<ApiError> {
  let detail = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && body.detail) detail = typeof body.detail === "string"
      ? body.detail
      : JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  private predictController: AbortController | null = null;

  constructor(private base: string = "") {}

  async meta(): Promise<MetaResponse> {
    const response = await fetch(`${this.base}/api/meta`);
    if (!response.ok) throw await readError(response);
    return response.json();
  }

  async records(filters: Record<string, string> = {}): Promise<RecordsResponse> {
    const params = new URLSearchParams(filters);
    const suffix = params.size > 0 ? `?${params}` : "";
    const response = await fetch(`${this.base}/api/records${suffix}`);
    if (!response.ok) throw await readError(response);
    return response.json();
  }

  /** Aborts any previous predict still in flight (latest wins). */
  async predict(request: PredictRequest): Promise<PredictResponse> {
    this.predictController?.abort();
    const controller = new AbortController();
    this.predictController = controller;
    const response = await fetch(`${this.base}/api/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
      signal: controller.signal,
    });
    if (!response.ok) throw await readError(response);
    return response.json();
  }
}
