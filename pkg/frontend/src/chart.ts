/** Chart rendering from chart-data documents.
 *
 * The document is consumed verbatim: every label and every value appears in
 * the output exactly as the server sent it, with no client-side
 * aggregation, rounding, or re-bucketing. Scaling only affects pixel
 * coordinates; the authoritative values travel in data-* attributes.
 */

import type { ChartData } from "./types.js";
import { escapeHtml } from "./format.js";

export interface ChartPoint {
  series: string;
  label: string;
  value: number | null;
}

/** Flatten a chart-data document into (series, label, value) points,
 * preserving order and values exactly. */
export function chartPoints(doc: ChartData): ChartPoint[] {
  const points: ChartPoint[] = [];
  for (const series of doc.series) {
    series.values.forEach((value, i) => {
      points.push({ series: series.name, label: doc.labels[i], value });
    });
  }
  return points;
}

const WIDTH = 640;
const HEIGHT = 240;
const PAD = 32;

export function renderChart(doc: ChartData): string {
  const numeric = doc.series
    .flatMap((s) => s.values)
    .filter((v): v is number => v !== null);
  const max = numeric.length ? Math.max(...numeric, 0) : 1;
  const span = Math.max(doc.labels.length - 1, 1);
  const x = (i: number) => PAD + (i * (WIDTH - 2 * PAD)) / span;
  const y = (v: number) =>
    HEIGHT - PAD - (max > 0 ? (v / max) * (HEIGHT - 2 * PAD) : 0);

  const axisLabels = doc.labels
    .map((label, i) =>
      `<text class="x-label" x="${x(i)}" y="${HEIGHT - 8}">` +
      `${escapeHtml(label)}</text>`)
    .join("");

  const seriesMarkup = doc.series
    .map((series) => {
      const line = series.values
        .map((v, i) => (v === null ? null : `${x(i)},${y(v)}`))
        .filter((p): p is string => p !== null)
        .join(" ");
      const points = series.values
        .map((v, i) => {
          if (v === null) return "";
          return `<circle class="point" cx="${x(i)}" cy="${y(v)}" r="3" ` +
            `data-series="${escapeHtml(series.name)}" ` +
            `data-label="${escapeHtml(doc.labels[i])}" ` +
            `data-value="${escapeHtml(v)}"></circle>`;
        })
        .join("");
      return `<g class="series" data-name="${escapeHtml(series.name)}">` +
        `<polyline fill="none" points="${line}"></polyline>${points}</g>`;
    })
    .join("");

  return `<svg class="chart" data-kind="${escapeHtml(doc.kind)}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}">${seriesMarkup}${axisLabels}</svg>`;
}
