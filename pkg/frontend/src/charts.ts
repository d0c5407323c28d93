/** SVG renderers for ChartSpec JSON.
 *
 * Values are drawn exactly as they arrive (no client-side re-aggregation);
 * a spec that violates the arity invariants renders a visible placeholder
 * instead of throwing.
 */

import type { ChartSpec } from "./types.js";

const WIDTH = 640;
const HEIGHT = 360;
const MARGIN = { top: 48, right: 24, bottom: 72, left: 56 };
const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

export function validateChartSpec(spec: unknown): string | null {
  const s = spec as ChartSpec;
  if (!s || typeof s !== "object") return "spec is not an object";
  if (s.kind !== "bar" && s.kind !== "line") return `unknown chart kind ${String(s.kind)}`;
  if (!Array.isArray(s.categories) || s.categories.length === 0) {
    return "categories must be a non-empty array";
  }
  if (!Array.isArray(s.series) || s.series.length === 0) return "series must be non-empty";
  if (s.kind === "bar" && s.series.length !== 1) return "bar charts carry exactly one series";
  for (const series of s.series) {
    if (!Array.isArray(series.values) || series.values.length !== s.categories.length) {
      return `series ${series.name} length does not match categories`;
    }
    if (!series.values.every((v) => typeof v === "number" && Number.isFinite(v))) {
      return `series ${series.name} contains non-numeric values`;
    }
  }
  return null;
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatValue(value: number): string {
  return String(value);
}

function frame(spec: ChartSpec, body: string): string {
  return (
    `<svg class="chart chart-${spec.kind}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `xmlns="http://www.w3.org/2000/svg" role="img" aria-label="${esc(spec.title)}">` +
    `<text class="chart-title" x="${WIDTH / 2}" y="24" text-anchor="middle">${esc(spec.title)}</text>` +
    `<text class="axis-label axis-x" x="${WIDTH / 2}" y="${HEIGHT - 8}" text-anchor="middle">${esc(spec.x_label)}</text>` +
    `<text class="axis-label axis-y" x="14" y="${HEIGHT / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 14 ${HEIGHT / 2})">${esc(spec.y_label)}</text>` +
    body +
    `</svg>`
  );
}

function renderBar(spec: ChartSpec): string {
  const values = spec.series[0].values;
  const max = Math.max(...values, 0);
  const slot = PLOT_W / values.length;
  const barWidth = Math.max(4, slot * 0.7);
  let body = "";
  values.forEach((value, i) => {
    const h = max > 0 ? (value / max) * PLOT_H : 0;
    const x = MARGIN.left + i * slot + (slot - barWidth) / 2;
    const y = MARGIN.top + PLOT_H - h;
    body += `<rect class="bar" data-category="${esc(spec.categories[i])}" data-value="${formatValue(value)}" x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${barWidth.toFixed(1)}" height="${h.toFixed(1)}"></rect>`;
    body += `<text class="bar-value" x="${(x + barWidth / 2).toFixed(1)}" y="${(y - 4).toFixed(1)}" text-anchor="middle">${formatValue(value)}</text>`;
    body += `<text class="bar-label" x="${(x + barWidth / 2).toFixed(1)}" y="${MARGIN.top + PLOT_H + 14}" text-anchor="end" transform="rotate(-35 ${(x + barWidth / 2).toFixed(1)} ${MARGIN.top + PLOT_H + 14})">${esc(spec.categories[i])}</text>`;
  });
  return frame(spec, body);
}

function renderLine(spec: ChartSpec): string {
  const all = spec.series.flatMap((s) => s.values);
  const max = Math.max(...all, 0);
  const n = spec.categories.length;
  const step = n > 1 ? PLOT_W / (n - 1) : 0;
  let body = "";
  spec.series.forEach((series, seriesIndex) => {
    const points = series.values.map((value, i) => {
      const x = MARGIN.left + (n > 1 ? i * step : PLOT_W / 2);
      const y = MARGIN.top + PLOT_H - (max > 0 ? (value / max) * PLOT_H : 0);
      return { x, y, value };
    });
    const path = points.map((p) => `${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
    body += `<polyline class="line series-${seriesIndex}" fill="none" points="${path}"></polyline>`;
    for (const [i, p] of points.entries()) {
      body += `<circle class="line-point" data-category="${esc(spec.categories[i])}" data-value="${formatValue(p.value)}" cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="2.5"></circle>`;
    }
  });
  const tick = Math.max(1, Math.ceil(n / 8));
  spec.categories.forEach((category, i) => {
    if (i % tick !== 0 && i !== n - 1) return;
    const x = MARGIN.left + (n > 1 ? i * step : PLOT_W / 2);
    body += `<text class="tick-label" x="${x.toFixed(1)}" y="${MARGIN.top + PLOT_H + 16}" text-anchor="middle">${esc(category)}</text>`;
  });
  return frame(spec, body);
}

/** Render a spec to SVG markup, or a visible placeholder when malformed. */
export function renderChart(spec: unknown): string {
  const problem = validateChartSpec(spec);
  if (problem !== null) {
    return `<div class="chart-placeholder" role="alert">malformed chart: ${esc(problem)}</div>`;
  }
  const valid = spec as ChartSpec;
  return valid.kind === "bar" ? renderBar(valid) : renderLine(valid);
}
