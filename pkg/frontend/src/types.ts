/** JSON document shapes exchanged with the service API (v1). */

export interface EndpointProbe {
  endpoint_id: string;
  available: boolean;
  probe_status: number;
}

export interface CapabilityManifest {
  token_valid: boolean;
  authenticated_user: string | null;
  scopes: string[];
  project_accessible: boolean;
  endpoints: EndpointProbe[];
  rate_limit_snapshot: { remaining: number; reset_at: string } | null;
  checked_at: string;
}

export interface TimeWindow {
  start: string;
  end: string;
}

export interface FilterDoc {
  time_window?: TimeWindow;
  states?: string[];
  min_comments?: number;
  authors?: string[];
  file_extensions?: string[];
  keywords?: string[];
}

export type MetricSelectionDoc = { category: string } | { metric_id: string };

export interface PlanDoc {
  plan_id: string;
  platform: string;
  entities: string[];
  filters: FilterDoc;
  metrics: MetricSelectionDoc[];
  provenance: { kind: string; query?: string; provider_label?: string };
  created_at: string;
  schema_version: number;
}

export interface ValidationIssue {
  severity: "error" | "warning";
  code: string;
  message: string;
  path: string;
}

export interface ValidationReport {
  valid: boolean;
  issues: ValidationIssue[];
}

export interface TranscriptRound {
  extraction_outcome: string;
  valid: boolean | null;
  issues: ValidationIssue[];
}

export interface PlanResponse {
  plan: PlanDoc;
  validation: ValidationReport;
  transcript?: TranscriptRound[];
}

export interface JobDoc {
  job_id: string;
  kind: string;
  state: "queued" | "running" | "done" | "partial" | "error";
  progress: number | null;
  result_ref: string | null;
  error_message: string | null;
}

export interface RunCounters {
  requests_issued: number;
  retries: number;
  pages_fetched: number;
  reviews_discovered: number;
  errors: number;
  [key: string]: number;
}

export interface RunErrorEntry {
  entity: string;
  key: string;
  status: number | null;
  message: string;
  [key: string]: unknown;
}

export interface RunManifestDoc {
  run_id: string;
  status: string;
  started_at: string;
  finished_at?: string | null;
  counters: RunCounters;
  checkpoints: Record<string, unknown>;
  error_log: RunErrorEntry[];
  resume_audit: unknown[];
  [key: string]: unknown;
}

export interface RunSummary {
  run_id: string;
  status: string;
  started_at: string;
  counters: RunCounters;
}

export interface ColumnDoc {
  name: string;
  value_kind: string;
}

export interface DatasetMetadata {
  dataset_id: string;
  source_run_id: string;
  applied_filters: FilterDoc;
  built_at: string;
  tables: Record<string, { columns: ColumnDoc[]; row_count: number }>;
  warnings: string[];
}

export type CellValue = string | number | boolean | null;

export interface RowsPage {
  columns: string[];
  rows: CellValue[][];
  total: number;
}

export interface ChartSeries {
  name: string;
  values: (number | null)[];
}

export interface ChartData {
  kind: "timeseries" | "table";
  labels: string[];
  series: ChartSeries[];
  spec?: Record<string, unknown>;
}

export interface SummaryReport {
  review_count: number;
  [key: string]: unknown;
}

export interface ScreenHit {
  review_id: string;
  comment_id: string;
  pattern: string;
  snippet: string;
}

export interface ScreenResponse {
  patterns: string[];
  hits: ScreenHit[];
}

export interface ErrorEnvelope {
  error: { code: string; message: string; issues?: unknown[] };
}
