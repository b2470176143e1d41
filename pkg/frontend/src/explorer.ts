/** Records explorer: scatter of per-accelerator throughput against the
 * user-entered cost per accelerator-hour.
 *
 * Throughput comes straight from each record; cost comes from the user's
 * cost table. Records without an entered cost cannot be placed and are
 * reported instead of silently dropped. */

import { escapeHtml } from "./format.js";
import type { BenchRecord } from "./types.js";

export interface ScatterPoint {
  x: number;
  y: number;
  vendor: string;
  label: string;
  record: BenchRecord;
}

export interface ScatterData {
  points: ScatterPoint[];
  missingCost: string[];
  nonThroughput: number;
}

/** Mirror of the server's accelerator identity: vendor-qualified with the
 * vendor deduplicated and whitespace collapsed. */
export function acceleratorKeyOf(record: BenchRecord): string {
  const rawName = record["system.accelerator.name"];
  const name = typeof rawName === "string" ? rawName.split(/\s+/).join(" ").trim() : "";
  const rawVendor = record["system.accelerator.vendor"];
  const vendor = typeof rawVendor === "string" ? rawVendor.split(/\s+/).join(" ").trim() : "";
  if (!vendor) return name;
  if (name.toLowerCase().startsWith(vendor.toLowerCase())) return name;
  return `${vendor} ${name}`;
}

export function buildScatterData(
  records: BenchRecord[],
  costs: Record<string, number>,
): ScatterData {
  const points: ScatterPoint[] = [];
  const missing = new Set<string>();
  let nonThroughput = 0;
  for (const record of records) {
    const y = record["metrics.result_per_accelerator"];
    if (record["metrics.units"] !== "Tokens/s" || typeof y !== "number") {
      nonThroughput += 1;
      continue;
    }
    const key = acceleratorKeyOf(record);
    const cost = costs[key];
    if (cost === undefined || cost <= 0) {
      if (key) missing.add(key);
      continue;
    }
    points.push({
      x: cost,
      y,
      vendor: typeof record["system.accelerator.vendor"] === "string"
        ? (record["system.accelerator.vendor"] as string)
        : "unknown",
      label: `${record["model.name"] ?? "?"} on ${key}`,
      record,
    });
  }
  return { points, missingCost: [...missing].sort(), nonThroughput };
}

const PALETTE = ["#2f6fde", "#d9542f", "#3d9e56", "#8e4fbe", "#c2a131", "#37a2a6"];

export function vendorColors(points: ScatterPoint[]): Map<string, string> {
  const colors = new Map<string, string>();
  for (const point of points) {
    if (!colors.has(point.vendor)) {
      colors.set(point.vendor, PALETTE[colors.size % PALETTE.length] ?? "#666");
    }
  }
  return colors;
}

interface Scale {
  (value: number): number;
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1;
  return (value: number) => outLo + ((value - lo) / span) * (outHi - outLo);
}

/** Standalone SVG markup for the scatter; point index is carried in a data
 * attribute so the page can wire click handlers to the detail pane. */
export function renderScatterSvg(points: ScatterPoint[], width = 640, height = 400): string {
  if (points.length === 0) {
    return '<svg role="img" width="0" height="0"></svg>';
  }
  const margin = { top: 16, right: 16, bottom: 44, left: 72 };
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const x = linearScale(0, Math.max(...xs) * 1.08, margin.left, width - margin.right);
  const y = linearScale(0, Math.max(...ys) * 1.08, height - margin.bottom, margin.top);
  const colors = vendorColors(points);

  const dots = points
    .map((p, i) => {
      const color = colors.get(p.vendor) ?? "#666";
      return (
        `<circle class="dot" data-index="${i}" cx="${x(p.x).toFixed(1)}" ` +
        `cy="${y(p.y).toFixed(1)}" r="6" fill="${color}">` +
        `<title>${escapeHtml(p.label)}: ${p.y} tokens/s at $${p.x}/h</title></circle>`
      );
    })
    .join("");

  const axisY = height - margin.bottom;
  return (
    `<svg role="img" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">` +
    `<line x1="${margin.left}" y1="${axisY}" x2="${width - margin.right}" y2="${axisY}" class="axis"/>` +
    `<line x1="${margin.left}" y1="${margin.top}" x2="${margin.left}" y2="${axisY}" class="axis"/>` +
    `<text x="${(margin.left + width - margin.right) / 2}" y="${height - 8}" class="axis-label">cost per accelerator-hour ($)</text>` +
    `<text x="14" y="${(margin.top + axisY) / 2}" class="axis-label" transform="rotate(-90 14 ${(margin.top + axisY) / 2})">tokens/s per accelerator</text>` +
    dots +
    `</svg>`
  );
}
