/** Glue between the API client, the alert stream, and the console state.
 * All mutations are optimistic with rollback on error; every write goes
 * through the documented endpoints only. */

import { ApiClient, ApiError } from "./api.js";
import { SseClient } from "./sse.js";
import { ConsoleState } from "./state.js";
import {
  ENTRY_ATTRIBUTES,
  type AlertEventRecord,
  type EntryDraft,
  type SightingFilters,
  type SightingRecord,
  type WatchlistEntryRecord,
} from "./types.js";

export class ValidationError extends Error {}

export function draftHasAttribute(draft: EntryDraft): boolean {
  return ENTRY_ATTRIBUTES.some((key) => {
    const value = draft[key];
    return value !== undefined && value !== null && value.trim() !== "";
  });
}

export class ConsoleController {
  readonly api: ApiClient;
  readonly state: ConsoleState;
  private stream: SseClient | null = null;
  private requestCounter = 0;

  constructor(api: ApiClient, state: ConsoleState) {
    this.api = api;
    this.state = state;
  }

  // -- watchlist editor ------------------------------------------------------

  async refreshWatchlist(): Promise<void> {
    this.state.setEntries(await this.api.listWatchlist());
  }

  /** Client-side validation mirrors the server's 422 rule, then optimistic
   * insert, replaced by the server record (or rolled back on error). */
  async createEntry(draft: EntryDraft): Promise<WatchlistEntryRecord> {
    if (!draftHasAttribute(draft)) {
      throw new ValidationError("a watchlist entry needs at least one attribute");
    }
    this.requestCounter += 1;
    const tempId = `pending-${this.requestCounter}`;
    const optimistic: WatchlistEntryRecord = {
      id: tempId,
      created_at: Date.now(),
      description: draft.description ?? "",
      make: draft.make ?? null,
      model: draft.model ?? null,
      color: draft.color ?? null,
      plate_text: draft.plate_text ?? null,
      plate_type: draft.plate_type ?? null,
      active: true,
    };
    this.state.upsertEntry(optimistic);
    try {
      const created = await this.api.createEntry(draft, `console-${tempId}`);
      this.state.removeEntry(tempId);
      this.state.upsertEntry(created);
      return created;
    } catch (err) {
      this.state.removeEntry(tempId); // rollback
      throw err;
    }
  }

  async updateEntry(id: string, patch: Partial<EntryDraft>): Promise<WatchlistEntryRecord> {
    const previous = this.state.entries.find((e) => e.id === id);
    if (previous) {
      this.state.upsertEntry({ ...previous, ...normalizePatch(patch) });
    }
    try {
      const updated = await this.api.updateEntry(id, patch);
      this.state.upsertEntry(updated);
      return updated;
    } catch (err) {
      if (previous) this.state.upsertEntry(previous); // rollback
      throw err;
    }
  }

  async deactivateEntry(id: string): Promise<void> {
    const previous = this.state.entries.find((e) => e.id === id);
    if (previous) this.state.upsertEntry({ ...previous, active: false });
    try {
      const updated = await this.api.deactivateEntry(id);
      this.state.upsertEntry(updated);
    } catch (err) {
      if (previous) this.state.upsertEntry(previous);
      throw err;
    }
  }

  // -- alert feed ------------------------------------------------------------

  startAlertFeed(options: { baseDelayMs?: number; maxDelayMs?: number } = {}): SseClient {
    this.stream = new SseClient(
      this.api.alertsUrl(),
      {
        onEvent: (type, data) => {
          if (type !== "match") return;
          this.state.addAlert(JSON.parse(data) as AlertEventRecord);
        },
        onStatus: (connected) => {
          this.state.connection = connected ? "connected" : "reconnecting";
        },
        onReconnect: () => void this.recoverMissedAlerts(),
      },
      options,
    );
    this.stream.start();
    return this.stream;
  }

  stopAlertFeed(): void {
    this.stream?.stop();
    this.state.connection = "idle";
  }

  /** After a reconnect, re-query sightings newer than the last seen event for
   * every active entry; the feed dedup (sighting id + entry id) drops
   * anything the live stream already delivered. */
  async recoverMissedAlerts(): Promise<void> {
    const since = this.state.lastEventTs;
    for (const entry of this.state.entries.filter((e) => e.active)) {
      const filters: SightingFilters = { from: since > 0 ? since : undefined };
      if (entry.color) filters.color = entry.color;
      if (entry.make) filters.make = entry.make;
      if (entry.model) filters.model = entry.model;
      if (entry.plate_type) filters.plate_type = entry.plate_type;
      if (entry.plate_text) filters.plate_like = entry.plate_text;
      let sightings: SightingRecord[];
      try {
        sightings = await this.api.sightings(filters);
      } catch {
        continue; // recovery is best-effort; the next reconnect retries
      }
      for (const sighting of sightings) {
        this.state.addAlert(
          {
            match: {
              sighting_id: sighting.id,
              entry_id: entry.id,
              score: 1.0,
              attributes_compared: 0,
              matched: true,
            },
            sighting,
            entry: { id: entry.id, description: entry.description },
            emitted_at: sighting.timestamp,
          },
          true,
        );
      }
    }
  }

  // -- search / route ----------------------------------------------------------

  async search(filters: SightingFilters): Promise<void> {
    this.state.setSearch(filters, await this.api.sightings(filters));
  }

  async loadRoute(entryId: string): Promise<void> {
    this.state.setRoute(entryId, await this.api.route(entryId));
  }
}

function normalizePatch(patch: Partial<EntryDraft>): Partial<WatchlistEntryRecord> {
  const out: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(patch)) {
    out[key] = value === undefined ? null : value;
  }
  return out as Partial<WatchlistEntryRecord>;
}

export { ApiError };
