/** HTML renderers. Pure string functions of the console state, so they are
 * testable without a DOM and the page reproduces exactly from state. */

import type { ConsoleState } from "./state.js";
import type { RouteWaypoint, SightingRecord, WatchlistEntryRecord } from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function chips(record: Pick<WatchlistEntryRecord, "make" | "model" | "color" | "plate_text" | "plate_type">): string {
  const parts: string[] = [];
  if (record.plate_text) parts.push(`<span class="chip chip-plate">${escapeHtml(record.plate_text)}</span>`);
  if (record.make) parts.push(`<span class="chip">${escapeHtml(record.make)}</span>`);
  if (record.model) parts.push(`<span class="chip">${escapeHtml(record.model)}</span>`);
  if (record.color) parts.push(`<span class="chip chip-color">${escapeHtml(record.color)}</span>`);
  if (record.plate_type) parts.push(`<span class="chip">${escapeHtml(record.plate_type)}</span>`);
  return parts.join(" ");
}

function stamp(ts: number): string {
  return new Date(ts).toISOString().replace("T", " ").replace(".000Z", "Z");
}

export function renderWatchlist(state: ConsoleState): string {
  if (state.entries.length === 0) {
    return `<p class="empty">No watchlist entries yet. Add the attributes you know; one is enough.</p>`;
  }
  const rows = state.entries
    .map((entry) => {
      const cls = entry.active ? "entry" : "entry entry-inactive";
      return (
        `<li class="${cls}" data-entry-id="${escapeHtml(entry.id)}">` +
        `<strong>${escapeHtml(entry.description || entry.id)}</strong> ${chips(entry)}` +
        ` <button data-action="route" data-entry-id="${escapeHtml(entry.id)}">route</button>` +
        (entry.active
          ? ` <button data-action="deactivate" data-entry-id="${escapeHtml(entry.id)}">deactivate</button>`
          : ` <span class="muted">inactive</span>`) +
        `</li>`
      );
    })
    .join("");
  return `<ul class="watchlist">${rows}</ul>`;
}

export function renderAlertFeed(state: ConsoleState): string {
  const status = `<div class="connection connection-${state.connection}">${state.connection}</div>`;
  const counter = state.unread > 0 ? `<span class="unread">${state.unread} unread</span>` : "";
  if (state.alerts.length === 0) {
    return `${status}${counter}<p class="empty">No alerts yet.</p>`;
  }
  const cards = state.alerts
    .map((card) => {
      const recovered = card.recovered ? ` <span class="muted">(recovered)</span>` : "";
      return (
        `<li class="alert-card" data-alert-key="${escapeHtml(card.key)}">` +
        `<a href="#sighting/${escapeHtml(card.sightingId)}">${escapeHtml(card.sightingId)}</a>` +
        ` matched <a href="#entry/${escapeHtml(card.entryId)}">${escapeHtml(card.entryId)}</a>` +
        ` score ${card.score.toFixed(2)} at ${stamp(card.emittedAt)}${recovered} ${chips(card.sighting)}` +
        `</li>`
      );
    })
    .join("");
  return `${status}${counter}<ul class="alerts">${cards}</ul>`;
}

export function renderSearchResults(results: SightingRecord[]): string {
  if (results.length === 0) return `<p class="empty">No sightings match the filters.</p>`;
  const rows = results
    .map(
      (s) =>
        `<tr data-sighting-id="${escapeHtml(s.id)}"><td>${stamp(s.timestamp)}</td>` +
        `<td>${escapeHtml(s.camera_id)}</td><td>${chips(s)}</td></tr>`,
    )
    .join("");
  return `<table class="sightings"><thead><tr><th>Time</th><th>Camera</th><th>Attributes</th></tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderRoute(state: ConsoleState, gapMinutes = 60): string {
  if (state.routeEntryId === null) return `<p class="empty">Select an entry to reconstruct its route.</p>`;
  if (state.routeWaypoints.length === 0) {
    return `<p class="empty">No matched sightings for ${escapeHtml(state.routeEntryId)} yet.</p>`;
  }
  const gaps = state.routeGaps(gapMinutes);
  const items: string[] = [];
  state.routeWaypoints.forEach((w: RouteWaypoint, i: number) => {
    const site = w.location?.site ? ` — ${escapeHtml(w.location.site)}` : "";
    items.push(
      `<li class="waypoint" data-sighting-id="${escapeHtml(w.sighting_id)}">` +
        `${stamp(w.timestamp)} · <strong>${escapeHtml(w.camera_id)}</strong>${site}</li>`,
    );
    if (i < gaps.length && gaps[i]) {
      items.push(`<li class="gap-divider">gap &gt; ${gapMinutes} min</li>`);
    }
  });
  return `<ol class="route">${items.join("")}</ol>`;
}
