/** Dashboard view state.
 *
 * Holds the active view, the connection manifest, the current plan with its
 * server-issued validation report, and the selected run/dataset. The plan
 * gating invariant lives here: a plan is submittable only while the
 * displayed validation report is valid *and* the plan is byte-identical to
 * what the server last validated; any local edit drops the report until
 * re-validation returns.
 */

import type {
  CapabilityManifest,
  PlanDoc,
  ValidationReport,
} from "./types.js";

export type View = "connect" | "plan" | "runs" | "dataset" | "analysis";

export const VIEWS: View[] = ["connect", "plan", "runs", "dataset", "analysis"];

export const DEFAULT_POLL_INTERVAL_MS = 2000;

export class DashboardStore {
  activeView: View = "connect";
  manifest: CapabilityManifest | null = null;
  connectError: string | null = null;
  currentPlan: PlanDoc | null = null;
  validation: ValidationReport | null = null;
  selectedRun: string | null = null;
  selectedDataset: string | null = null;
  pollIntervalMs = DEFAULT_POLL_INTERVAL_MS;

  private validatedPlanJson: string | null = null;

  setManifest(manifest: CapabilityManifest): void {
    this.manifest = manifest;
    this.connectError = null;
  }

  setConnectError(message: string): void {
    this.connectError = message;
  }

  /** The plan view is disabled until a manifest with a valid token exists. */
  get planViewEnabled(): boolean {
    return this.manifest !== null && this.manifest.token_valid;
  }

  canOpen(view: View): boolean {
    if (view === "plan") return this.planViewEnabled;
    return true;
  }

  /** Switch views; gated views are refused and the state left untouched. */
  open(view: View): boolean {
    if (!this.canOpen(view)) return false;
    this.activeView = view;
    return true;
  }

  /** Install a plan exactly as the server validated it. */
  acceptValidated(plan: PlanDoc, report: ValidationReport): void {
    this.currentPlan = plan;
    this.validation = report;
    this.validatedPlanJson = JSON.stringify(plan);
  }

  /** Apply a local edit. The previous validation report no longer describes
   * the displayed plan, so it is dropped until the server re-validates. */
  editPlan(mutate: (draft: PlanDoc) => void): void {
    if (this.currentPlan === null) {
      throw new Error("no plan to edit");
    }
    const draft = structuredClone(this.currentPlan);
    mutate(draft);
    this.currentPlan = draft;
    this.validation = null;
  }

  get planSubmittable(): boolean {
    return (
      this.validation !== null &&
      this.validation.valid &&
      this.currentPlan !== null &&
      this.validatedPlanJson === JSON.stringify(this.currentPlan)
    );
  }

  /** The exact bytes the server validated; the run submission payload. */
  submissionPayload(): string {
    if (!this.planSubmittable || this.validatedPlanJson === null) {
      throw new Error("plan is not submittable");
    }
    return this.validatedPlanJson;
  }
}
