/** Pure view renderers: state in, HTML string out.
 *
 * No DOM access and no data mutation happens here, so every view can be
 * rendered and asserted on headlessly. Interactive elements carry data-action
 * attributes that the app shell binds through event delegation.
 */

import type {
  CapabilityManifest,
  DatasetMetadata,
  PlanDoc,
  RowsPage,
  RunManifestDoc,
  RunSummary,
  ScreenHit,
  SummaryReport,
  ChartData,
  ValidationReport,
} from "./types.js";
import { categoryMembers } from "./catalog.js";
import { renderChart } from "./chart.js";
import {
  escapeHtml,
  formatCell,
  pageCount,
  progressPercent,
} from "./format.js";
import type { DashboardStore, View } from "./store.js";
import { VIEWS } from "./store.js";

export function renderNav(store: DashboardStore): string {
  const tabs = VIEWS.map((view: View) => {
    const classes = ["tab"];
    if (view === store.activeView) classes.push("active");
    const disabled = store.canOpen(view) ? "" : " disabled";
    return `<button class="${classes.join(" ")}" data-action="open-view" ` +
      `data-view="${view}"${disabled}>${view}</button>`;
  });
  return `<nav class="tabs">${tabs.join("")}</nav>`;
}

// --- connect ---------------------------------------------------------------

export function renderConnectView(manifest: CapabilityManifest | null,
                                  error: string | null): string {
  if (error !== null) {
    return `<section class="view connect">` +
      `<p class="error">${escapeHtml(error)}</p>` +
      `<button data-action="retry-verify">Retry</button></section>`;
  }
  if (manifest === null) {
    return `<section class="view connect">` +
      `<button data-action="verify">Verify access</button></section>`;
  }
  const badge = (label: string, ok: boolean, extra = "") =>
    `<span class="badge ${ok ? "ok" : "fail"}"${extra}>` +
    `${escapeHtml(label)}: ${ok ? "pass" : "fail"}</span>`;
  const banner = manifest.token_valid
    ? ""
    : `<div class="banner blocking">Token is invalid — collection and ` +
      `planning are unavailable until credentials are fixed.</div>`;
  const endpoints = manifest.endpoints
    .map((e) => badge(e.endpoint_id, e.available,
      ` data-endpoint="${escapeHtml(e.endpoint_id)}"`))
    .join("");
  const user = manifest.authenticated_user
    ? `<p class="user">Authenticated as ` +
      `${escapeHtml(manifest.authenticated_user)}</p>`
    : "";
  return `<section class="view connect">${banner}` +
    `<div class="summary">${badge("token", manifest.token_valid)}` +
    `${badge("project", manifest.project_accessible)}</div>${user}` +
    `<div class="endpoints">${endpoints}</div>` +
    `<button data-action="verify">Re-check</button></section>`;
}

// --- plan ------------------------------------------------------------------

const ALL_ENTITIES = ["reviews", "commits", "comments", "files"];
const ALL_CATEGORIES =
  ["review_meta", "commits", "comments", "files", "derived"];

function issueList(report: ValidationReport | null): string {
  if (report === null) {
    return `<p class="stale">Plan edited — validation pending.</p>`;
  }
  if (report.issues.length === 0) return "";
  const items = report.issues
    .map((issue) =>
      `<li class="issue ${issue.severity}" data-code="${escapeHtml(issue.code)}">` +
      `${escapeHtml(issue.code)}: ${escapeHtml(issue.message)}</li>`)
    .join("");
  return `<ul class="issues">${items}</ul>`;
}

function planForm(plan: PlanDoc, report: ValidationReport | null,
                  submittable: boolean): string {
  const selected = new Set(
    plan.metrics.flatMap((m) => ("category" in m ? [m.category] : [])));
  const entities = ALL_ENTITIES.map((entity) => {
    const checked = plan.entities.includes(entity) ? " checked" : "";
    return `<label><input type="checkbox" data-action="toggle-entity" ` +
      `data-entity="${entity}"${checked}>${entity}</label>`;
  }).join("");
  const categories = ALL_CATEGORIES.map((category) => {
    const checked = selected.has(category) ? " checked" : "";
    const preview = selected.has(category)
      ? `<ul class="expansion" data-category="${category}">` +
        categoryMembers(category)
          .map((id) => `<li class="member">${id}</li>`).join("") +
        `</ul>`
      : "";
    return `<div class="category"><label>` +
      `<input type="checkbox" data-action="toggle-category" ` +
      `data-category="${category}"${checked}>${category}</label>${preview}</div>`;
  }).join("");
  const window = plan.filters.time_window;
  const minComments = plan.filters.min_comments;
  return `<form class="plan-form" data-plan-id="${escapeHtml(plan.plan_id)}">` +
    `<fieldset class="entities">${entities}</fieldset>` +
    `<fieldset class="filters">` +
    `<input name="window_start" data-action="edit-filter" ` +
    `value="${escapeHtml(window?.start ?? "")}">` +
    `<input name="window_end" data-action="edit-filter" ` +
    `value="${escapeHtml(window?.end ?? "")}">` +
    `<input name="min_comments" data-action="edit-filter" ` +
    `value="${minComments ?? ""}">` +
    `</fieldset>` +
    `<fieldset class="metrics">${categories}</fieldset>` +
    `${issueList(report)}` +
    `<button type="submit" data-action="submit-run"` +
    `${submittable ? "" : " disabled"}>Start run</button>` +
    `<button type="button" data-action="revalidate">Re-validate</button>` +
    `</form>`;
}

export function renderPlanView(store: DashboardStore): string {
  const queryBox = `<form class="query">` +
    `<input name="query" placeholder="Describe what to collect">` +
    `<button data-action="generate-plan">Generate plan</button></form>`;
  const form = store.currentPlan === null
    ? `<p class="empty">No plan yet — describe one above or load a file.</p>`
    : planForm(store.currentPlan, store.validation, store.planSubmittable);
  return `<section class="view plan">${queryBox}${form}</section>`;
}

// --- run monitor -----------------------------------------------------------

export function renderRunsView(runs: RunSummary[],
                               selected: RunManifestDoc | null,
                               notFound: string | null = null): string {
  if (notFound !== null) {
    return `<section class="view runs"><div class="not-found">` +
      `Run ${escapeHtml(notFound)} was not found.</div>` +
      `<button data-action="open-view" data-view="runs">Back</button></section>`;
  }
  const list = runs
    .map((run) =>
      `<li><button data-action="select-run" ` +
      `data-run="${escapeHtml(run.run_id)}">${escapeHtml(run.run_id)} ` +
      `(${escapeHtml(run.status)})</button></li>`)
    .join("");
  let detail = "";
  if (selected !== null) {
    const pct = progressPercent(selected);
    const errors = selected.error_log
      .map((e) =>
        `<tr><td>${escapeHtml(e.entity)}</td><td>${escapeHtml(e.key)}</td>` +
        `<td>${escapeHtml(e.status ?? "")}</td>` +
        `<td>${escapeHtml(e.message)}</td></tr>`)
      .join("");
    const resume = selected.status === "partial"
      ? `<button data-action="resume-run" ` +
        `data-run="${escapeHtml(selected.run_id)}">Resume</button>`
      : "";
    const counters = Object.entries(selected.counters)
      .map(([name, value]) =>
        `<span class="counter" data-counter="${escapeHtml(name)}">` +
        `${escapeHtml(name)}: ${escapeHtml(value)}</span>`)
      .join("");
    detail = `<div class="run-detail" data-status="${escapeHtml(selected.status)}">` +
      `<progress value="${pct}" max="100"></progress>` +
      `<div class="counters">${counters}</div>` +
      `<table class="error-log"><tbody>${errors}</tbody></table>${resume}</div>`;
  }
  return `<section class="view runs"><ul class="run-list">${list}</ul>` +
    `${detail}</section>`;
}

// --- dataset ---------------------------------------------------------------

export function renderDatasetView(meta: DatasetMetadata | null,
                                  table: string, page: RowsPage | null,
                                  pageIndex: number, limit: number): string {
  if (meta === null) {
    return `<section class="view dataset">` +
      `<p class="empty">No dataset selected.</p>` +
      `<button data-action="build-dataset">Build dataset</button></section>`;
  }
  const tabs = Object.keys(meta.tables)
    .map((name) =>
      `<button data-action="select-table" data-table="${escapeHtml(name)}"` +
      `${name === table ? ' class="active"' : ""}>${escapeHtml(name)}</button>`)
    .join("");
  let tableMarkup = "";
  let pager = "";
  if (page !== null) {
    const header = page.columns
      .map((c) => `<th>${escapeHtml(c)}</th>`).join("");
    const body = page.rows
      .map((row) =>
        `<tr>${row.map((v) => `<td>${escapeHtml(formatCell(v))}</td>`).join("")}</tr>`)
      .join("");
    const pages = pageCount(page.total, limit);
    tableMarkup = `<table class="rows"><thead><tr>${header}</tr></thead>` +
      `<tbody>${body}</tbody></table>`;
    pager = `<div class="pager" data-pages="${pages}">` +
      `<button data-action="prev-page"${pageIndex <= 0 ? " disabled" : ""}>` +
      `Prev</button>` +
      `<span class="page">Page ${pageIndex + 1} of ${pages}</span>` +
      `<button data-action="next-page"` +
      `${pageIndex + 1 >= pages ? " disabled" : ""}>Next</button></div>`;
  }
  return `<section class="view dataset" ` +
    `data-dataset="${escapeHtml(meta.dataset_id)}">` +
    `<div class="table-tabs">${tabs}</div>${tableMarkup}${pager}` +
    `<button data-action="refine-query">Refine query</button></section>`;
}

// --- analysis --------------------------------------------------------------

export function renderAnalysisView(summary: SummaryReport | null,
                                   chart: ChartData | null,
                                   hits: ScreenHit[] | null): string {
  const cards = summary === null
    ? ""
    : `<div class="cards">` +
      Object.entries(summary)
        .filter(([, value]) => typeof value === "number")
        .map(([name, value]) =>
          `<div class="card" data-stat="${escapeHtml(name)}">` +
          `<span class="stat-name">${escapeHtml(name)}</span>` +
          `<span class="stat-value">${escapeHtml(value)}</span></div>`)
        .join("") +
      `</div>`;
  const chartMarkup = chart === null ? "" : renderChart(chart);
  const screen = hits === null
    ? ""
    : `<table class="screen-hits"><thead><tr><th>review</th><th>comment</th>` +
      `<th>pattern</th><th>snippet</th></tr></thead><tbody>` +
      hits
        .map((hit) =>
          `<tr><td>${escapeHtml(hit.review_id)}</td>` +
          `<td>${escapeHtml(hit.comment_id)}</td>` +
          `<td>${escapeHtml(hit.pattern)}</td>` +
          `<td class="snippet">${escapeHtml(hit.snippet)}</td></tr>`)
        .join("") +
      `</tbody></table>`;
  return `<section class="view analysis">${cards}${chartMarkup}${screen}` +
    `<button data-action="refine-query">Refine query</button></section>`;
}
