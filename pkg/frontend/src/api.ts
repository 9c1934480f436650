// Thin typed client over the service endpoints. Every non-2xx response
// carries an ApiError body; it is rethrown with its code and status so
// callers (and the contract tests) can assert on them.

import type { ProjectView, MetricView } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: unknown = null,
  ) {
    super(message);
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let code = "domain_error";
  let message = `HTTP ${response.status}`;
  let detail: unknown = null;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
    detail = body.detail ?? null;
  } catch {
    // non-JSON error body; keep the defaults
  }
  throw new ApiError(response.status, code, message, detail);
}

export interface FactorOverride {
  bv: number;
  tc: number;
  rr: number;
  js: number;
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.url(path));
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  async health(): Promise<boolean> {
    try {
      const response = await fetch(this.url("/api/health"));
      return response.ok;
    } catch {
      return false;
    }
  }

  createProject(title: string, requirementsText: string): Promise<{ project_id: string }> {
    return this.postJson("/api/projects", { title, requirements_text: requirementsText });
  }

  listProjects(): Promise<{ projects: { id: string; title: string; phase: string }[] }> {
    return this.getJson("/api/projects");
  }

  getProject(id: string): Promise<ProjectView> {
    return this.getJson(`/api/projects/${id}`);
  }

  generateStories(id: string): Promise<unknown> {
    return this.postJson(`/api/projects/${id}/stories`, {});
  }

  prioritize(
    id: string,
    method: string,
    factorOverrides?: Record<string, FactorOverride>,
  ): Promise<unknown> {
    const body: Record<string, unknown> = { method };
    if (factorOverrides && Object.keys(factorOverrides).length > 0) {
      body.factor_overrides = factorOverrides;
    }
    return this.postJson(`/api/projects/${id}/prioritize`, body);
  }

  /** CSV bytes exactly as the service serves them. */
  async downloadCsv(id: string): Promise<Uint8Array> {
    const response = await fetch(this.url(`/api/projects/${id}/prioritization.csv`));
    await raiseForStatus(response);
    return new Uint8Array(await response.arrayBuffer());
  }

  generateUml(id: string): Promise<unknown> {
    return this.postJson(`/api/projects/${id}/uml`, {});
  }

  /** The rendered SVG document body. */
  async fetchUmlSvg(id: string): Promise<string> {
    const response = await fetch(this.url(`/api/projects/${id}/uml.svg`));
    await raiseForStatus(response);
    return await response.text();
  }

  generateCode(id: string, method: string): Promise<unknown> {
    return this.postJson(`/api/projects/${id}/code`, { method });
  }

  runCompliance(id: string): Promise<unknown> {
    return this.postJson(`/api/projects/${id}/compliance`, {});
  }

  decide(id: string, decision: "approve" | "reject"): Promise<{ phase: string; gate: string }> {
    return this.postJson(`/api/projects/${id}/phase`, { decision });
  }

  metrics(id: string): Promise<{ metrics: MetricView[] }> {
    return this.getJson(`/api/projects/${id}/metrics`);
  }
}
