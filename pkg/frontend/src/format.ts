/** Display formatting only. The dashboard never recomputes a metric: every
 * number shown is an API-returned value passed through one of these. */

/** Tokens-per-dollar is shown byte-equal to the API value. */
export function formatTokensPerDollar(value: number | null): string {
  return value === null ? "—" : String(value);
}

export function formatThroughput(value: number | null): string {
  return value === null ? "—" : value.toLocaleString("en-US", { maximumFractionDigits: 2 });
}

export function formatCount(value: number): string {
  return String(value);
}

export function formatSupport(support: number): string {
  if (support === 0) return "no data";
  if (support < 3) return `low (${support})`;
  return String(support);
}

export function recordText(value: unknown): string {
  if (value === null || value === undefined) return "";
  return typeof value === "string" ? value : JSON.stringify(value);
}

/** Record fields are arbitrary strings; escape anything interpolated into
 * markup. */
export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
