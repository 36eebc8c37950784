/** Browser bootstrap: wires the controller to the page and re-renders each
 * section from state after every change. Server base URL and optional token
 * come from the query string (?server=...&token=...). */

import { ApiClient } from "./api.js";
import { ConsoleController, ValidationError } from "./controller.js";
import { ConsoleState } from "./state.js";
import { renderAlertFeed, renderRoute, renderSearchResults, renderWatchlist } from "./views.js";
import { filtersFromQuery, filtersToQuery } from "./url.js";
import type { EntryDraft } from "./types.js";

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("server") ?? "http://127.0.0.1:8080", {
  token: params.get("token") ?? undefined,
});
const state = new ConsoleState();
const controller = new ConsoleController(api, state);

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function renderAll(): void {
  el("watchlist").innerHTML = renderWatchlist(state);
  el("alerts").innerHTML = renderAlertFeed(state);
  el("results").innerHTML = renderSearchResults(state.searchResults);
  el("route").innerHTML = renderRoute(state);
}

function banner(message: string): void {
  const node = el("banner");
  node.textContent = message;
  node.classList.toggle("hidden", message === "");
  if (message) setTimeout(() => node.classList.add("hidden"), 5000);
}

async function submitEntry(event: Event): Promise<void> {
  event.preventDefault();
  const form = event.target as HTMLFormElement;
  const data = new FormData(form);
  const draft: EntryDraft = {};
  for (const key of ["description", "make", "model", "color", "plate_text", "plate_type"] as const) {
    const value = (data.get(key) as string | null)?.trim();
    if (value) draft[key] = value;
  }
  try {
    await controller.createEntry(draft);
    form.reset();
  } catch (err) {
    banner(err instanceof ValidationError ? err.message : `create failed: ${String(err)}`);
  }
  renderAll();
}

async function submitSearch(event: Event): Promise<void> {
  event.preventDefault();
  const data = new FormData(event.target as HTMLFormElement);
  const query = new URLSearchParams();
  for (const [key, value] of data.entries()) {
    if (typeof value === "string" && value.trim()) query.set(key, value.trim());
  }
  const filters = filtersFromQuery(query.toString());
  await controller.search(filters);
  // shareable view: filters round-trip through the location hash
  window.location.hash = `search?${filtersToQuery(filters)}`;
  renderAll();
}

async function onListClick(event: Event): Promise<void> {
  const target = event.target as HTMLElement;
  const entryId = target.dataset.entryId;
  if (!entryId) return;
  try {
    if (target.dataset.action === "deactivate") await controller.deactivateEntry(entryId);
    if (target.dataset.action === "route") await controller.loadRoute(entryId);
  } catch (err) {
    banner(String(err));
  }
  renderAll();
}

async function boot(): Promise<void> {
  el("entry-form").addEventListener("submit", (e) => void submitEntry(e));
  el("search-form").addEventListener("submit", (e) => void submitSearch(e));
  el("watchlist").addEventListener("click", (e) => void onListClick(e));
  el("alerts").addEventListener("click", () => {
    state.markAllRead();
    renderAll();
  });
  controller.startAlertFeed();
  await controller.refreshWatchlist();
  const hash = window.location.hash;
  if (hash.startsWith("#search?")) {
    await controller.search(filtersFromQuery(hash.slice("#search?".length)));
  }
  renderAll();
  setInterval(renderAll, 1000); // connection badge + feed freshness
}

void boot();
