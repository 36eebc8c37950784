/** Sighting filters round-trip through the URL query string so any search
 * view is shareable as a link. */

import type { SightingFilters } from "./types.js";

const NUMERIC_KEYS = new Set(["from", "to"]);
const STRING_KEYS = ["camera", "color", "make", "model", "plate_type", "plate_like"] as const;

export function filtersToQuery(filters: SightingFilters): string {
  const params = new URLSearchParams();
  if (filters.from !== undefined) params.set("from", String(filters.from));
  if (filters.to !== undefined) params.set("to", String(filters.to));
  for (const key of STRING_KEYS) {
    const value = filters[key];
    if (value !== undefined && value !== "") params.set(key, value);
  }
  return params.toString();
}

export function filtersFromQuery(query: string): SightingFilters {
  const params = new URLSearchParams(query.startsWith("?") ? query.slice(1) : query);
  const filters: SightingFilters = {};
  for (const [key, value] of params.entries()) {
    if (NUMERIC_KEYS.has(key)) {
      const parsed = Number(value);
      if (Number.isFinite(parsed)) (filters as Record<string, unknown>)[key] = parsed;
    } else if ((STRING_KEYS as readonly string[]).includes(key) && value !== "") {
      (filters as Record<string, unknown>)[key] = value;
    }
  }
  return filters;
}
