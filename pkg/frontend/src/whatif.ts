/** What-if panel: turn an /api/predict response into table rows.
 *
 * Rows keep the API's order (the server already ranked them); this module
 * only formats. */

import {
  escapeHtml,
  formatCount,
  formatSupport,
  formatThroughput,
  formatTokensPerDollar,
} from "./format.js";
import type { CostedPrediction, PredictResponse } from "./types.js";

export interface WhatifRow {
  rank: number;
  acceleratorKey: string;
  throughputText: string;
  neededText: string;
  tokensPerDollarText: string;
  supportText: string;
  badges: string[];
  feasible: boolean;
}

function badgesFor(prediction: CostedPrediction): string[] {
  const badges = [...prediction.constraint_tags];
  if (prediction.extrapolated) badges.push("extrapolated");
  if (!prediction.fits_memory) badges.push("memory-tight");
  return badges;
}

export function buildWhatifRows(response: PredictResponse): WhatifRow[] {
  return response.results.map((prediction, index) => ({
    rank: index + 1,
    acceleratorKey: prediction.accelerator_key,
    throughputText: formatThroughput(prediction.predicted_per_accel_throughput),
    neededText: formatCount(prediction.accelerators_needed),
    tokensPerDollarText: formatTokensPerDollar(prediction.tokens_per_dollar),
    supportText: formatSupport(prediction.support),
    badges: badgesFor(prediction),
    feasible: prediction.feasible,
  }));
}

export function renderWhatifTable(rows: WhatifRow[]): string {
  if (rows.length === 0) {
    return '<p class="empty">No candidates. Enter at least one accelerator cost.</p>';
  }
  const body = rows
    .map((row) => {
      const badges = row.badges
        .map((b) => `<span class="badge ${row.feasible ? "warn" : "bad"}">${escapeHtml(b)}</span>`)
        .join(" ");
      return (
        `<tr class="${row.feasible ? "feasible" : "infeasible"}">` +
        `<td>${row.rank}</td>` +
        `<td>${escapeHtml(row.acceleratorKey)}</td>` +
        `<td class="num">${escapeHtml(row.throughputText)}</td>` +
        `<td class="num">${escapeHtml(row.neededText)}</td>` +
        `<td class="num">${escapeHtml(row.tokensPerDollarText)}</td>` +
        `<td class="num">${escapeHtml(row.supportText)}</td>` +
        `<td>${badges || '<span class="badge ok">ok</span>'}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    '<table class="results"><thead><tr>' +
    "<th>#</th><th>accelerator</th><th>tokens/s per accel</th>" +
    "<th>accels needed</th><th>tokens per $</th><th>support</th><th>flags</th>" +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}
