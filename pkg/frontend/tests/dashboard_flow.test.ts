/** End-to-end contract flow against the fully mocked service:
 * verify -> generate plan -> edit/re-validate -> submit run -> poll to a
 * terminal state -> dataset pages -> chart. Exercises the gating, payload
 * byte-identity, and poll-termination invariants together.
 */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ServiceClient } from "../src/client.js";
import { pollJob } from "../src/poller.js";
import { DashboardStore } from "../src/store.js";
import type { JobDoc } from "../src/types.js";
import { renderConnectView, renderPlanView } from "../src/views.js";
import { MockService, PAPER_QUERY } from "./mock_service.js";

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("dashboard flow", () => {
  it("drives connect through analysis over the mocked service", async () => {
    const service = new MockService({
      jobStates: ["queued", "running", "done"],
    });
    const client = new ServiceClient("http://localhost", service.fetchFn);
    const store = new DashboardStore();

    // connect: verify and render badges
    store.setManifest(await client.verify());
    expect(renderConnectView(store.manifest, null))
      .toContain('class="badge ok"');
    expect(store.open("plan")).toBe(true);

    // plan: the paper query yields a valid plan (2023 window, min_comments=1)
    const generated = await client.planFromQuery(PAPER_QUERY);
    store.acceptValidated(generated.plan, generated.validation);
    expect(store.currentPlan!.filters.time_window!.start)
      .toBe("2023-01-01T00:00:00Z");
    expect(store.currentPlan!.filters.min_comments).toBe(1);
    expect(store.planSubmittable).toBe(true);

    // edit: flip the window end before the start -> server rejects,
    // submit stays disabled
    store.editPlan((draft) => {
      draft.filters.time_window = {
        start: "2024-01-01T00:00:00Z", end: "2023-01-01T00:00:00Z",
      };
    });
    expect(store.planSubmittable).toBe(false);
    const rejected = await client.validatePlan(
      JSON.stringify(store.currentPlan));
    store.acceptValidated(rejected.plan, rejected.validation);
    expect(store.planSubmittable).toBe(false);
    expect(renderPlanView(store)).toContain('data-code="WINDOW_INVERTED"');

    // fix the edit and re-validate -> submittable again
    store.editPlan((draft) => {
      draft.filters.time_window = {
        start: "2023-01-01T00:00:00Z", end: "2024-01-01T00:00:00Z",
      };
    });
    const accepted = await client.validatePlan(
      JSON.stringify(store.currentPlan));
    store.acceptValidated(accepted.plan, accepted.validation);
    expect(store.planSubmittable).toBe(true);

    // submit: the payload on the wire is byte-identical to the plan the
    // server last validated
    const validatedJson = store.submissionPayload();
    const job = await client.startRun(validatedJson);
    expect(service.lastRunPayload).toBe(`{"plan":${validatedJson}}`);

    // monitor: poll to the terminal state, then polling ceases
    const states: JobDoc["state"][] = [];
    const poller = pollJob(client, job.job_id, store.pollIntervalMs,
      (update) => states.push(update.state));
    poller.start();
    await vi.advanceTimersByTimeAsync(10_000);
    expect(states).toEqual(["queued", "running", "done"]);
    const settled = service.jobCalls;
    await vi.advanceTimersByTimeAsync(60_000);
    expect(service.jobCalls).toBe(settled);

    // dataset: run manifest, build, rows paging
    const manifest = await client.getRun("run-1234abcd");
    expect(manifest.counters.reviews_discovered).toBe(20);
    await client.buildDataset(manifest.run_id);
    const meta = await client.getDataset("ds-9e8f7a6b");
    expect(meta.tables.reviews.row_count).toBe(120);
    const page = await client.getRows(meta.dataset_id, "reviews", 110, 10);
    expect(page.total).toBe(120);
    expect(page.rows).toHaveLength(10);

    // analysis: summary and chart served verbatim
    const summary = await client.summary(meta.dataset_id);
    expect(summary.review_count).toBe(120);
    const chart = await client.runSpec(meta.dataset_id, {
      granularity: "reviews",
      group_by: { column: "created_at", bucket: "iso_week" },
      aggregations: [{ fn: "count", column: "*" }],
      output: "timeseries",
    });
    expect(chart.kind).toBe("timeseries");
    expect(chart.labels).toEqual(["2022-W52", "2023-W01", "2023-W02"]);
    expect(chart.series[0].values).toEqual([4, 0, 7]);
  });
});
