/** Page wiring: fetch → pure builders → DOM. All metric math happens
 * server-side; this file moves strings around. */

import { ApiClient, ApiError } from "./api.js";
import { acceleratorKeyOf, buildScatterData, renderScatterSvg, vendorColors } from "./explorer.js";
import { escapeHtml, recordText } from "./format.js";
import { loadCosts, loadMemory, saveCosts, saveMemory } from "./storage.js";
import type { BenchRecord, MetaResponse, PredictRequest } from "./types.js";
import { buildWhatifRows, renderWhatifTable } from "./whatif.js";

const api = new ApiClient("");

interface PageState {
  meta: MetaResponse;
  records: BenchRecord[];
  costs: Record<string, number>;
  memory: Record<string, number>;
  filters: Record<string, string>;
}

const state: PageState = {
  meta: { accelerators: [], models: [], scenarios: [], data_types: [], divisions: [],
          vendors: [] },
  records: [],
  costs: loadCosts(),
  memory: loadMemory(),
  filters: {},
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setOffline(offline: boolean, detail = ""): void {
  const banner = el<HTMLDivElement>("offline-banner");
  banner.hidden = !offline;
  banner.textContent = offline ? `API unreachable${detail ? `: ${detail}` : ""} — retrying on next action` : "";
}

// ---------------------------------------------------------------------------
// Explorer

function renderFilterSelect(id: string, values: string[], label: string): void {
  const select = el<HTMLSelectElement>(id);
  const current = select.value;
  select.innerHTML =
    `<option value="">${label}: all</option>` +
    values.map((v) => `<option value="${escapeHtml(v)}">${escapeHtml(v)}</option>`).join("");
  select.value = values.includes(current) ? current : "";
}

function renderDetail(record: BenchRecord | null): void {
  const pane = el<HTMLDivElement>("detail");
  if (!record) {
    pane.innerHTML = '<p class="empty">Click a point to inspect the full record.</p>';
    return;
  }
  const rows = Object.keys(record)
    .sort()
    .map((key) =>
      `<tr><th>${escapeHtml(key)}</th><td>${escapeHtml(recordText(record[key]))}</td></tr>`)
    .join("");
  pane.innerHTML = `<table class="detail-table">${rows}</table>`;
}

function renderExplorer(): void {
  const data = buildScatterData(state.records, state.costs);
  el<HTMLDivElement>("scatter").innerHTML = renderScatterSvg(data.points);

  const legend = vendorColors(data.points);
  el<HTMLDivElement>("legend").innerHTML = [...legend.entries()]
    .map(([vendor, color]) =>
      `<span class="key"><i style="background:${color}"></i>${escapeHtml(vendor)}</span>`)
    .join("");

  const notes: string[] = [];
  if (state.records.length === 0) {
    notes.push("The store has no records yet. Run a benchmark or ingest a result file.");
  }
  if (data.missingCost.length > 0) {
    const keys = escapeHtml(data.missingCost.join(", "));
    notes.push(`No cost entered for: ${keys} — add one below to plot them.`);
  }
  if (data.nonThroughput > 0) {
    notes.push(`${data.nonThroughput} record(s) without Tokens/s throughput are not plotted.`);
  }
  el<HTMLDivElement>("explorer-notes").innerHTML = notes.map((n) => `<p>${n}</p>`).join("");

  document.querySelectorAll<SVGCircleElement>("#scatter .dot").forEach((dot) => {
    dot.addEventListener("click", () => {
      const index = Number(dot.dataset.index);
      renderDetail(data.points[index]?.record ?? null);
    });
  });
}

async function refreshRecords(): Promise<void> {
  try {
    const response = await api.records(state.filters);
    state.records = response.records;
    setOffline(false);
  } catch (error) {
    if (!(error instanceof ApiError)) {
      setOffline(true, String(error));
      return;
    }
    el<HTMLDivElement>("explorer-notes").textContent = error.message;
  }
  renderExplorer();
}

// ---------------------------------------------------------------------------
// Cost table (shared by both panels)

function knownAccelerators(): string[] {
  const keys = new Set<string>([...state.meta.accelerators, ...Object.keys(state.costs)]);
  return [...keys].sort();
}

function renderCostTable(): void {
  const rows = knownAccelerators()
    .map((key) => {
      const safe = escapeHtml(key);
      const cost = state.costs[key];
      const memory = state.memory[key];
      return (
        `<tr><td>${safe}</td>` +
        `<td><input type="number" min="0" step="0.01" data-cost="${safe}" ` +
        `value="${cost ?? ""}" placeholder="$/h"></td>` +
        `<td><input type="number" min="0" step="1" data-memory="${safe}" ` +
        `value="${memory ?? ""}" placeholder="GB"></td></tr>`
      );
    })
    .join("");
  el<HTMLTableSectionElement>("cost-rows").innerHTML = rows;

  document.querySelectorAll<HTMLInputElement>("input[data-cost]").forEach((input) => {
    input.addEventListener("input", () => {
      const key = input.dataset.cost as string;
      const value = Number(input.value);
      if (Number.isFinite(value) && value > 0) state.costs[key] = value;
      else delete state.costs[key];
      saveCosts(state.costs);
      renderExplorer();
      scheduleWhatif();
    });
  });
  document.querySelectorAll<HTMLInputElement>("input[data-memory]").forEach((input) => {
    input.addEventListener("input", () => {
      const key = input.dataset.memory as string;
      const value = Number(input.value);
      if (Number.isFinite(value) && value > 0) state.memory[key] = value;
      else delete state.memory[key];
      saveMemory(state.memory);
      scheduleWhatif();
    });
  });
}

// ---------------------------------------------------------------------------
// What-if panel

let whatifTimer: ReturnType<typeof setTimeout> | null = null;

function scheduleWhatif(): void {
  if (whatifTimer) clearTimeout(whatifTimer);
  whatifTimer = setTimeout(() => void runWhatif(), 250);
}

function whatifRequest(): PredictRequest | null {
  const paramsB = Number(el<HTMLInputElement>("wf-params").value);
  const dtype = el<HTMLSelectElement>("wf-dtype").value;
  const scenario = el<HTMLSelectElement>("wf-scenario").value;
  if (!Number.isFinite(paramsB) || paramsB <= 0 || !dtype || !scenario) return null;
  const minThroughput = Number(el<HTMLInputElement>("wf-min-throughput").value);
  return {
    params_b: paramsB,
    weight_data_type: dtype,
    scenario,
    min_throughput: Number.isFinite(minThroughput) && minThroughput > 0 ? minThroughput : null,
    must_fit_memory: el<HTMLInputElement>("wf-fit-memory").checked,
    costs: state.costs,
    memory_gb: state.memory,
  };
}

async function runWhatif(): Promise<void> {
  const target = el<HTMLDivElement>("whatif-results");
  const request = whatifRequest();
  if (!request) {
    target.innerHTML = '<p class="empty">Fill in model size, data type, and scenario.</p>';
    return;
  }
  if (Object.keys(request.costs).length === 0) {
    target.innerHTML = '<p class="empty">Enter at least one accelerator cost to rank.</p>';
    return;
  }
  try {
    const response = await api.predict(request);
    target.innerHTML = renderWhatifTable(buildWhatifRows(response));
    setOffline(false);
  } catch (error) {
    if (error instanceof DOMException && error.name === "AbortError") return;
    if (error instanceof ApiError) {
      target.innerHTML = `<p class="error">${error.status}: ${escapeHtml(error.message)}</p>`;
      return;
    }
    setOffline(true, String(error));
  }
}

// ---------------------------------------------------------------------------
// Boot

function fillSelect(id: string, values: string[], fallback: string[]): void {
  const select = el<HTMLSelectElement>(id);
  const options = values.length > 0 ? values : fallback;
  select.innerHTML = options.map((v) => `<option value="${v}">${v}</option>`).join("");
}

async function boot(): Promise<void> {
  try {
    state.meta = await api.meta();
    setOffline(false);
  } catch (error) {
    setOffline(true, error instanceof Error ? error.message : String(error));
  }

  renderFilterSelect("filter-scenario", state.meta.scenarios, "scenario");
  renderFilterSelect("filter-model", state.meta.models, "model");
  renderFilterSelect("filter-vendor", state.meta.vendors, "vendor");
  renderFilterSelect("filter-division", state.meta.divisions, "division");
  fillSelect("wf-scenario", state.meta.scenarios, ["Server", "Offline"]);
  fillSelect("wf-dtype", state.meta.data_types,
             ["bfloat16", "fp16", "fp32", "fp8", "int8", "int4"]);

  const filterMap: Record<string, string> = {
    "filter-scenario": "submission.scenario",
    "filter-model": "model.name",
    "filter-vendor": "system.accelerator.vendor",
    "filter-division": "submission.division",
  };
  for (const [id, key] of Object.entries(filterMap)) {
    el<HTMLSelectElement>(id).addEventListener("change", (event) => {
      const value = (event.target as HTMLSelectElement).value;
      if (value) state.filters[key] = value;
      else delete state.filters[key];
      void refreshRecords();
    });
  }

  ["wf-params", "wf-min-throughput"].forEach((id) =>
    el<HTMLInputElement>(id).addEventListener("input", scheduleWhatif));
  ["wf-dtype", "wf-scenario"].forEach((id) =>
    el<HTMLSelectElement>(id).addEventListener("change", scheduleWhatif));
  el<HTMLInputElement>("wf-fit-memory").addEventListener("change", scheduleWhatif);

  el<HTMLButtonElement>("add-accelerator").addEventListener("click", () => {
    const input = el<HTMLInputElement>("new-accelerator");
    const key = input.value.trim();
    if (key && !(key in state.costs)) {
      state.costs[key] = 1.0;
      saveCosts(state.costs);
      renderCostTable();
      renderExplorer();
      scheduleWhatif();
    }
    input.value = "";
  });

  renderCostTable();
  renderDetail(null);
  await refreshRecords();
  void runWhatif();
}

// Expose the keying helper for the browser console; handy when adding costs.
(globalThis as Record<string, unknown>).flexboardAcceleratorKeyOf = acceleratorKeyOf;

document.addEventListener("DOMContentLoaded", () => void boot());
