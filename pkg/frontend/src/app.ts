/** Browser shell: wires the store, client, and pollers to the DOM.
 *
 * All rendering goes through the pure view functions; this module only
 * swaps innerHTML and translates DOM events into store/client calls.
 */

import { ServiceClient } from "./client.js";
import { ApiError } from "./client.js";
import { Poller, pollJob, pollRun } from "./poller.js";
import { DashboardStore } from "./store.js";
import type { View } from "./store.js";
import type {
  ChartData,
  DatasetMetadata,
  JobDoc,
  RowsPage,
  RunManifestDoc,
  RunSummary,
  ScreenHit,
  SummaryReport,
} from "./types.js";
import {
  renderAnalysisView,
  renderConnectView,
  renderDatasetView,
  renderNav,
  renderPlanView,
  renderRunsView,
} from "./views.js";

const PAGE_LIMIT = 25;

export class App {
  readonly store = new DashboardStore();

  private runs: RunSummary[] = [];
  private runDetail: RunManifestDoc | null = null;
  private runNotFound: string | null = null;
  private runPoller: Poller<RunManifestDoc> | null = null;
  private jobPoller: Poller<JobDoc> | null = null;
  private datasetMeta: DatasetMetadata | null = null;
  private table = "reviews";
  private page: RowsPage | null = null;
  private pageIndex = 0;
  private summary: SummaryReport | null = null;
  private chart: ChartData | null = null;
  private hits: ScreenHit[] | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ServiceClient = new ServiceClient(),
  ) {
    root.addEventListener("click", (event) => this.onClick(event));
    root.addEventListener("change", (event) => this.onChange(event));
    root.addEventListener("submit", (event) => event.preventDefault());
  }

  render(): void {
    const store = this.store;
    let body: string;
    switch (store.activeView) {
      case "connect":
        body = renderConnectView(store.manifest, store.connectError);
        break;
      case "plan":
        body = renderPlanView(store);
        break;
      case "runs":
        body = renderRunsView(this.runs, this.runDetail, this.runNotFound);
        break;
      case "dataset":
        body = renderDatasetView(this.datasetMeta, this.table, this.page,
          this.pageIndex, PAGE_LIMIT);
        break;
      case "analysis":
        body = renderAnalysisView(this.summary, this.chart, this.hits);
        break;
    }
    this.root.innerHTML = renderNav(store) + body;
  }

  private onClick(event: Event): void {
    const target = (event.target as HTMLElement).closest<HTMLElement>(
      "[data-action]");
    if (!target || target.hasAttribute("disabled")) return;
    const action = target.dataset.action ?? "";
    void this.dispatch(action, target);
  }

  private onChange(event: Event): void {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (!action) return;
    void this.dispatch(action, target);
  }

  private async dispatch(action: string, el: HTMLElement): Promise<void> {
    switch (action) {
      case "open-view":
        this.store.open(el.dataset.view as View);
        if (this.store.activeView === "runs") await this.refreshRuns();
        break;
      case "verify":
      case "retry-verify":
        await this.verify();
        break;
      case "generate-plan":
        await this.generatePlan();
        break;
      case "edit-filter":
        this.applyFilterEdit(el as HTMLInputElement);
        break;
      case "toggle-entity":
        this.toggleEntity(el as HTMLInputElement);
        break;
      case "toggle-category":
        this.toggleCategory(el as HTMLInputElement);
        break;
      case "revalidate":
        await this.revalidate();
        break;
      case "submit-run":
        await this.submitRun();
        break;
      case "select-run":
        await this.selectRun(el.dataset.run ?? "");
        break;
      case "resume-run":
        await this.submitRun();
        break;
      case "build-dataset":
        await this.buildDataset();
        break;
      case "select-table":
        this.table = el.dataset.table ?? "reviews";
        this.pageIndex = 0;
        await this.loadPage();
        break;
      case "prev-page":
        this.pageIndex = Math.max(0, this.pageIndex - 1);
        await this.loadPage();
        break;
      case "next-page":
        this.pageIndex += 1;
        await this.loadPage();
        break;
      case "refine-query":
        this.store.open("plan");
        break;
      default:
        return;
    }
    this.render();
  }

  private async verify(): Promise<void> {
    try {
      this.store.setManifest(await this.client.verify());
    } catch (error) {
      this.store.setConnectError(
        error instanceof ApiError ? error.message : "service unreachable");
    }
  }

  private queryText(): string {
    const input = this.root.querySelector<HTMLInputElement>(
      'input[name="query"]');
    return input?.value ?? "";
  }

  private async generatePlan(): Promise<void> {
    const query = this.queryText();
    if (!query) return;
    const response = await this.client.planFromQuery(query);
    this.store.acceptValidated(response.plan, response.validation);
    this.store.open("plan");
  }

  private applyFilterEdit(input: HTMLInputElement): void {
    const name = input.name;
    const value = input.value;
    this.store.editPlan((draft) => {
      if (name === "min_comments") {
        if (value === "") delete draft.filters.min_comments;
        else draft.filters.min_comments = Number(value);
        return;
      }
      const window = draft.filters.time_window ?? { start: "", end: "" };
      if (name === "window_start") window.start = value;
      if (name === "window_end") window.end = value;
      draft.filters.time_window = window;
    });
  }

  private toggleEntity(input: HTMLInputElement): void {
    const entity = input.dataset.entity ?? "";
    this.store.editPlan((draft) => {
      draft.entities = input.checked
        ? [...draft.entities, entity]
        : draft.entities.filter((e) => e !== entity);
    });
  }

  private toggleCategory(input: HTMLInputElement): void {
    const category = input.dataset.category ?? "";
    this.store.editPlan((draft) => {
      draft.metrics = input.checked
        ? [...draft.metrics, { category }]
        : draft.metrics.filter(
            (m) => !("category" in m && m.category === category));
    });
  }

  private async revalidate(): Promise<void> {
    if (this.store.currentPlan === null) return;
    const response = await this.client.validatePlan(
      JSON.stringify(this.store.currentPlan));
    this.store.acceptValidated(response.plan, response.validation);
  }

  private async submitRun(): Promise<void> {
    if (!this.store.planSubmittable) return;
    const job = await this.client.startRun(this.store.submissionPayload());
    this.jobPoller?.stop();
    this.jobPoller = pollJob(this.client, job.job_id,
      this.store.pollIntervalMs, (update) => {
        if (update.state === "done" || update.state === "partial") {
          this.store.selectedRun = update.result_ref;
          void this.refreshRuns().then(() => this.render());
        }
      });
    this.jobPoller.start();
    this.store.open("runs");
    await this.refreshRuns();
  }

  private async refreshRuns(): Promise<void> {
    this.runs = await this.client.listRuns();
  }

  private async selectRun(runId: string): Promise<void> {
    this.store.selectedRun = runId;
    this.runNotFound = null;
    this.runPoller?.stop();
    try {
      this.runDetail = await this.client.getRun(runId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.runNotFound = runId;
        this.runDetail = null;
        return;
      }
      throw error;
    }
    this.runPoller = pollRun(this.client, runId, this.store.pollIntervalMs,
      (manifest) => {
        this.runDetail = manifest;
        this.render();
      });
    this.runPoller.start();
  }

  private async buildDataset(): Promise<void> {
    if (!this.store.selectedRun) return;
    const job = await this.client.buildDataset(this.store.selectedRun);
    this.jobPoller?.stop();
    this.jobPoller = pollJob(this.client, job.job_id,
      this.store.pollIntervalMs, (update) => {
        if (update.state === "done" && update.result_ref) {
          void this.openDataset(update.result_ref).then(() => this.render());
        }
      });
    this.jobPoller.start();
  }

  private async openDataset(datasetId: string): Promise<void> {
    this.store.selectedDataset = datasetId;
    this.datasetMeta = await this.client.getDataset(datasetId);
    this.table = "reviews";
    this.pageIndex = 0;
    await this.loadPage();
    this.summary = await this.client.summary(datasetId);
    this.store.open("dataset");
  }

  private async loadPage(): Promise<void> {
    if (!this.store.selectedDataset) return;
    this.page = await this.client.getRows(this.store.selectedDataset,
      this.table, this.pageIndex * PAGE_LIMIT, PAGE_LIMIT);
  }
}

export function mount(root: HTMLElement): App {
  const app = new App(root);
  app.render();
  return app;
}
