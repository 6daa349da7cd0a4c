import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ServiceClient } from "../src/client.js";
import { Poller, pollJob, pollRun } from "../src/poller.js";
import type { JobDoc } from "../src/types.js";
import {
  MockService,
  partialManifestDoc,
  runningManifestDoc,
} from "./mock_service.js";

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

function jobClient(service: MockService): ServiceClient {
  return new ServiceClient("http://localhost", service.fetchFn);
}

describe("job polling", () => {
  it("observes queued -> running -> done in order and then stops", async () => {
    const service = new MockService({
      jobStates: ["queued", "running", "done"],
    });
    const seen: string[] = [];
    const poller = pollJob(jobClient(service), "job-feed1234", 2000,
      (job) => seen.push(job.state));
    poller.start();
    await vi.advanceTimersByTimeAsync(10_000);
    expect(seen).toEqual(["queued", "running", "done"]);
    expect(poller.active).toBe(false);
  });

  it("issues no further requests after reaching a terminal state", async () => {
    const service = new MockService({ jobStates: ["running", "error"] });
    const poller = pollJob(jobClient(service), "job-feed1234", 2000);
    poller.start();
    await vi.advanceTimersByTimeAsync(4000);
    expect(service.jobCalls).toBe(2);
    await vi.advanceTimersByTimeAsync(60_000);
    expect(service.jobCalls).toBe(2);
    expect(poller.active).toBe(false);
  });

  it("partial is terminal for jobs", async () => {
    const service = new MockService({
      jobStates: ["queued", "running", "partial"],
    });
    const poller = pollJob(jobClient(service), "job-feed1234", 2000);
    poller.start();
    await vi.advanceTimersByTimeAsync(30_000);
    expect(service.jobCalls).toBe(3);
  });

  it("stop() halts polling before a terminal state", async () => {
    const service = new MockService({ jobStates: ["running"] });
    const poller = pollJob(jobClient(service), "job-feed1234", 2000);
    poller.start();
    await vi.advanceTimersByTimeAsync(5000);
    const calls = service.jobCalls;
    expect(calls).toBeGreaterThan(1);
    poller.stop();
    await vi.advanceTimersByTimeAsync(20_000);
    expect(service.jobCalls).toBe(calls);
  });

  it("polls at the configured interval (default 2 s)", async () => {
    const service = new MockService({ jobStates: ["running"] });
    const poller = pollJob(jobClient(service), "job-feed1234");
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(service.jobCalls).toBe(1);
    await vi.advanceTimersByTimeAsync(1999);
    expect(service.jobCalls).toBe(1);
    await vi.advanceTimersByTimeAsync(1);
    expect(service.jobCalls).toBe(2);
    poller.stop();
  });

  it("keeps at most one poll in flight even with a slow service", async () => {
    let inFlight = 0;
    let maxInFlight = 0;
    let calls = 0;
    const slowFetch = (): Promise<JobDoc> => {
      inFlight += 1;
      calls += 1;
      maxInFlight = Math.max(maxInFlight, inFlight);
      return new Promise((resolve) => {
        // each response takes 5 s — longer than the 2 s poll interval
        setTimeout(() => {
          inFlight -= 1;
          resolve({ job_id: "j", kind: "collection_run", state: "running",
                    progress: null, result_ref: null, error_message: null });
        }, 5000);
      });
    };
    const poller = new Poller(slowFetch, () => false, 2000);
    poller.start();
    await vi.advanceTimersByTimeAsync(30_000);
    expect(maxInFlight).toBe(1);
    expect(calls).toBeGreaterThan(1);
    poller.stop();
  });

  it("survives transient fetch failures and keeps polling", async () => {
    let calls = 0;
    const flaky = (): Promise<JobDoc> => {
      calls += 1;
      if (calls < 3) return Promise.reject(new Error("connection reset"));
      return Promise.resolve({ job_id: "j", kind: "collection_run",
        state: "done", progress: null, result_ref: "run-1",
        error_message: null });
    };
    const poller = new Poller(flaky,
      (job: JobDoc) => job.state === "done", 2000);
    poller.start();
    await vi.advanceTimersByTimeAsync(10_000);
    expect(calls).toBe(3);
    expect(poller.history).toHaveLength(1);
    expect(poller.active).toBe(false);
  });
});

describe("run polling", () => {
  it("stops when the run reaches a terminal status", async () => {
    const service = new MockService({
      runDocs: [runningManifestDoc(), runningManifestDoc(),
                partialManifestDoc()],
    });
    const statuses: string[] = [];
    const poller = pollRun(jobClient(service), "run-1234abcd", 2000,
      (m) => statuses.push(m.status));
    poller.start();
    await vi.advanceTimersByTimeAsync(20_000);
    expect(statuses).toEqual(["collecting", "collecting", "partial"]);
    expect(service.runCalls).toBe(3);
    expect(poller.active).toBe(false);
  });
});
