import type { Catalog, FieldError, JobInfo, MetricRow, RunConfigBody } from "./types.js";

const TOKEN_KEY = "pnrl.session";

/** Raised on HTTP 422; carries per-field diagnostics for inline display. */
export class ApiValidationError extends Error {
  errors: FieldError[];

  constructor(errors: FieldError[]) {
    super(errors.map((e) => `${e.field}: ${e.message}`).join("; ") || "invalid config");
    this.name = "ApiValidationError";
    this.errors = errors;
  }
}

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

export function getSessionToken(): string | null {
  try {
    return window.localStorage.getItem(TOKEN_KEY);
  } catch {
    return null;
  }
}

export function setSessionToken(token: string | null): void {
  try {
    if (token === null) window.localStorage.removeItem(TOKEN_KEY);
    else window.localStorage.setItem(TOKEN_KEY, token);
  } catch {
    // storage may be unavailable; the default session still works
  }
}

/** Thin typed client over the service HTTP API. */
export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    const token = getSessionToken();
    if (token) h["X-Session-Token"] = token;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (res.status === 422) {
      const payload = await res.json();
      const errors: FieldError[] = payload?.detail?.errors ?? [];
      throw new ApiValidationError(errors);
    }
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const payload = await res.json();
        if (typeof payload?.detail === "string") detail = payload.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  catalog(): Promise<Catalog> {
    return this.request<Catalog>("GET", "/api/catalog");
  }

  schema(): Promise<unknown> {
    return this.request("GET", "/api/schema");
  }

  async listJobs(): Promise<JobInfo[]> {
    const payload = await this.request<{ jobs: JobInfo[] }>("GET", "/api/jobs");
    return payload.jobs;
  }

  getJob(jobId: string): Promise<JobInfo> {
    return this.request<JobInfo>("GET", `/api/jobs/${jobId}`);
  }

  createJob(config: RunConfigBody): Promise<JobInfo> {
    return this.request<JobInfo>("POST", "/api/jobs", config);
  }

  cancelJob(jobId: string): Promise<JobInfo> {
    return this.request<JobInfo>("POST", `/api/jobs/${jobId}/cancel`);
  }

  async metricsAfter(jobId: string, after: number): Promise<MetricRow[]> {
    const payload = await this.request<{ rows: MetricRow[] }>(
      "GET",
      `/api/jobs/${jobId}/metrics?after=${after}`,
    );
    return payload.rows;
  }

  async login(): Promise<string> {
    const payload = await this.request<{ token: string }>("POST", "/api/session/login");
    setSessionToken(payload.token);
    return payload.token;
  }

  async logout(): Promise<void> {
    await this.request("POST", "/api/session/logout");
    setSessionToken(null);
  }
}
