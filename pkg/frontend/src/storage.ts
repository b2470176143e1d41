/** Cost and memory entries live in the browser only; they are sent with each
 * predict request, never persisted server-side. */

const COSTS_KEY = "flexboard.costs";
const MEMORY_KEY = "flexboard.memory";

function storage(): Storage | null {
  try {
    return typeof localStorage === "undefined" ? null : localStorage;
  } catch {
    return null;
  }
}

function loadMap(key: string): Record<string, number> {
  const store = storage();
  if (!store) return {};
  try {
    const raw = store.getItem(key);
    if (!raw) return {};
    const parsed = JSON.parse(raw);
    const out: Record<string, number> = {};
    for (const [k, v] of Object.entries(parsed)) {
      if (typeof v === "number" && Number.isFinite(v) && v > 0) out[k] = v;
    }
    return out;
  } catch {
    return {};
  }
}

function saveMap(key: string, value: Record<string, number>): void {
  storage()?.setItem(key, JSON.stringify(value));
}

export const loadCosts = (): Record<string, number> => loadMap(COSTS_KEY);
export const saveCosts = (costs: Record<string, number>): void => saveMap(COSTS_KEY, costs);
export const loadMemory = (): Record<string, number> => loadMap(MEMORY_KEY);
export const saveMemory = (memory: Record<string, number>): void => saveMap(MEMORY_KEY, memory);
