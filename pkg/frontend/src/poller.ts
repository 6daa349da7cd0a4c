/** Fixed-interval polling with at most one request in flight.
 *
 * Polling stops permanently once the observed value is terminal (or stop()
 * is called); transient fetch failures are swallowed and the next tick
 * retries.
 */

import type { ServiceClient } from "./client.js";
import type { JobDoc, RunManifestDoc } from "./types.js";
import { DEFAULT_POLL_INTERVAL_MS } from "./store.js";

export const TERMINAL_JOB_STATES: ReadonlySet<string> =
  new Set(["done", "partial", "error"]);

export const TERMINAL_RUN_STATUSES: ReadonlySet<string> =
  new Set(["completed", "partial", "failed"]);

export class Poller<T> {
  readonly history: T[] = [];

  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private stopped = true;

  constructor(
    private readonly fetchOnce: () => Promise<T>,
    private readonly isTerminal: (value: T) => boolean,
    private readonly intervalMs: number = DEFAULT_POLL_INTERVAL_MS,
    private readonly onUpdate?: (value: T) => void,
  ) {}

  get active(): boolean {
    return !this.stopped;
  }

  start(): void {
    if (!this.stopped) return;
    this.stopped = false;
    void this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private async tick(): Promise<void> {
    if (this.stopped || this.inFlight) return;
    this.inFlight = true;
    let terminal = false;
    try {
      const value = await this.fetchOnce();
      this.history.push(value);
      this.onUpdate?.(value);
      terminal = this.isTerminal(value);
    } catch {
      // transient failure: keep the schedule, retry next tick
    } finally {
      this.inFlight = false;
    }
    if (terminal) {
      this.stop();
      return;
    }
    if (!this.stopped) {
      this.timer = setTimeout(() => void this.tick(), this.intervalMs);
    }
  }
}

export function pollJob(
  client: ServiceClient,
  jobId: string,
  intervalMs: number = DEFAULT_POLL_INTERVAL_MS,
  onUpdate?: (job: JobDoc) => void,
): Poller<JobDoc> {
  return new Poller(
    () => client.getJob(jobId),
    (job) => TERMINAL_JOB_STATES.has(job.state),
    intervalMs,
    onUpdate,
  );
}

export function pollRun(
  client: ServiceClient,
  runId: string,
  intervalMs: number = DEFAULT_POLL_INTERVAL_MS,
  onUpdate?: (manifest: RunManifestDoc) => void,
): Poller<RunManifestDoc> {
  return new Poller(
    () => client.getRun(runId),
    (manifest) => TERMINAL_RUN_STATUSES.has(manifest.status),
    intervalMs,
    onUpdate,
  );
}
