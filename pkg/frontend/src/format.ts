/** Small presentation helpers shared by the views. */

import type { RunManifestDoc } from "./types.js";

export function escapeHtml(value: unknown): string {
  return String(value ?? "")
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function pageCount(total: number, limit: number): number {
  if (limit <= 0 || total <= 0) return 0;
  return Math.ceil(total / limit);
}

/** Run progress in [0, 100], derived from manifest counters/checkpoints:
 * the fraction of per-review fan-outs completed once the listing phase has
 * discovered reviews, 100 at any terminal status. */
export function progressPercent(manifest: RunManifestDoc): number {
  if (["completed", "partial", "failed"].includes(manifest.status)) {
    return 100;
  }
  const discovered = manifest.counters.reviews_discovered;
  if (!discovered) return 0;
  const fanouts = (manifest.checkpoints as {
    fanouts_done?: Record<string, unknown[]>;
  }).fanouts_done ?? {};
  const entities = Object.keys(fanouts);
  if (entities.length === 0) return 0;
  const done = entities.reduce(
    (sum, entity) => sum + (fanouts[entity]?.length ?? 0), 0);
  const expected = discovered * entities.length;
  return Math.min(100, Math.round((100 * done) / expected));
}

export function formatCell(value: unknown): string {
  if (value === null || value === undefined) return "";
  return String(value);
}
