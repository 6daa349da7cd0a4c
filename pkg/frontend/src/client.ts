/** Typed client for the service API (v1).
 *
 * Every call goes through the documented JSON endpoints; non-2xx responses
 * carry an error envelope and surface as ApiError. The fetch function is
 * injectable so tests can run against a fully mocked service.
 */

import type {
  CapabilityManifest,
  ChartData,
  DatasetMetadata,
  ErrorEnvelope,
  FilterDoc,
  JobDoc,
  PlanResponse,
  RowsPage,
  RunManifestDoc,
  RunSummary,
  ScreenResponse,
  SummaryReport,
} from "./types.js";

const API = "/api/v1";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly issues: unknown[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let envelope: ErrorEnvelope | null = null;
  try {
    envelope = (await response.json()) as ErrorEnvelope;
  } catch {
    // non-JSON error body; fall through to a generic ApiError
  }
  if (envelope && envelope.error) {
    throw new ApiError(response.status, envelope.error.code,
      envelope.error.message, envelope.error.issues ?? []);
  }
  throw new ApiError(response.status, "HTTP_ERROR",
    `unexpected status ${response.status}`);
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private get(path: string): Promise<Response> {
    return this.fetchFn(this.baseUrl + API + path, { method: "GET" });
  }

  private post(path: string, body: string): Promise<Response> {
    return this.fetchFn(this.baseUrl + API + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
  }

  async verify(): Promise<CapabilityManifest> {
    return unwrap(await this.post("/platform/verify", "{}"));
  }

  async planFromQuery(query: string): Promise<PlanResponse> {
    return unwrap(await this.post("/plans", JSON.stringify({ query })));
  }

  /** Validate/normalize a plan document server-side. */
  async validatePlan(planJson: string): Promise<PlanResponse> {
    return unwrap(await this.post("/plans", `{"plan":${planJson}}`));
  }

  /** Submit a run. The plan JSON is spliced into the request body verbatim,
   * so the payload is byte-identical to the serialized plan passed in. */
  async startRun(planJson: string): Promise<JobDoc> {
    const doc = await unwrap<{ job: JobDoc }>(
      await this.post("/runs", `{"plan":${planJson}}`));
    return doc.job;
  }

  async listRuns(): Promise<RunSummary[]> {
    const doc = await unwrap<{ runs: RunSummary[] }>(await this.get("/runs"));
    return doc.runs;
  }

  async getRun(runId: string): Promise<RunManifestDoc> {
    const doc = await unwrap<{ manifest: RunManifestDoc }>(
      await this.get(`/runs/${encodeURIComponent(runId)}`));
    return doc.manifest;
  }

  async getJob(jobId: string): Promise<JobDoc> {
    const doc = await unwrap<{ job: JobDoc }>(
      await this.get(`/jobs/${encodeURIComponent(jobId)}`));
    return doc.job;
  }

  async buildDataset(runId: string, filters?: FilterDoc,
                     metrics?: string[]): Promise<JobDoc> {
    const body: Record<string, unknown> = { run_id: runId };
    if (filters) body.filters = filters;
    if (metrics) body.metrics = metrics;
    const doc = await unwrap<{ job: JobDoc }>(
      await this.post("/datasets", JSON.stringify(body)));
    return doc.job;
  }

  async listDatasets(): Promise<DatasetMetadata[]> {
    const doc = await unwrap<{ datasets: DatasetMetadata[] }>(
      await this.get("/datasets"));
    return doc.datasets;
  }

  async getDataset(datasetId: string): Promise<DatasetMetadata> {
    const doc = await unwrap<{ metadata: DatasetMetadata }>(
      await this.get(`/datasets/${encodeURIComponent(datasetId)}`));
    return doc.metadata;
  }

  async getRows(datasetId: string, table: string, offset: number,
                limit: number): Promise<RowsPage> {
    const qs = new URLSearchParams({
      table, offset: String(offset), limit: String(limit),
    });
    return unwrap(await this.get(
      `/datasets/${encodeURIComponent(datasetId)}/rows?${qs}`));
  }

  async summary(datasetId: string): Promise<SummaryReport> {
    const doc = await unwrap<{ summary: SummaryReport }>(
      await this.post("/analyses",
        JSON.stringify({ dataset_id: datasetId, summary: true })));
    return doc.summary;
  }

  async runSpec(datasetId: string,
                spec: Record<string, unknown>): Promise<ChartData> {
    return unwrap(await this.post("/analyses",
      JSON.stringify({ dataset_id: datasetId, spec })));
  }

  async keywordScreen(datasetId: string,
                      patterns: string[]): Promise<ScreenResponse> {
    return unwrap(await this.post("/keyword-screen",
      JSON.stringify({ dataset_id: datasetId, patterns })));
  }
}
