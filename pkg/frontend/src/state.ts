/** Console state: watchlist entries, the alert feed, sighting search, and
 * the route view. Pure data plus small mutators; views render from this
 * alone, so reloading against the same server state reproduces the UI. */

import type {
  AlertEventRecord,
  RouteWaypoint,
  SightingFilters,
  SightingRecord,
  WatchlistEntryRecord,
} from "./types.js";

export interface AlertCard {
  key: string; // dedup key: sighting id + entry id
  sightingId: string;
  entryId: string;
  emittedAt: number;
  sighting: SightingRecord;
  entryDescription: string;
  score: number;
  recovered: boolean; // true when synthesized by a reconnect re-query
}

export type ConnectionState = "idle" | "connected" | "reconnecting";

export function alertKey(sightingId: string, entryId: string): string {
  return `${sightingId}::${entryId}`;
}

export class ConsoleState {
  entries: WatchlistEntryRecord[] = [];
  /** Newest first; ordering among live alerts matches server emission order. */
  alerts: AlertCard[] = [];
  unread = 0;
  connection: ConnectionState = "idle";
  searchFilters: SightingFilters = {};
  searchResults: SightingRecord[] = [];
  routeEntryId: string | null = null;
  routeWaypoints: RouteWaypoint[] = [];
  lastEventTs = 0;
  private seen = new Set<string>();

  setEntries(entries: WatchlistEntryRecord[]): void {
    this.entries = entries;
  }

  upsertEntry(entry: WatchlistEntryRecord): void {
    const i = this.entries.findIndex((e) => e.id === entry.id);
    if (i >= 0) this.entries[i] = entry;
    else this.entries.push(entry);
  }

  removeEntry(id: string): void {
    this.entries = this.entries.filter((e) => e.id !== id);
  }

  /** Append an alert card unless its (sighting, entry) pair was already seen.
   * Returns true when a new card was added. */
  addAlert(event: AlertEventRecord, recovered = false): boolean {
    const key = alertKey(event.sighting.id, event.match.entry_id);
    if (this.seen.has(key)) return false;
    this.seen.add(key);
    this.alerts.unshift({
      key,
      sightingId: event.sighting.id,
      entryId: event.match.entry_id,
      emittedAt: event.emitted_at,
      sighting: event.sighting,
      entryDescription: event.entry.description ?? "",
      score: event.match.score,
      recovered,
    });
    this.unread += 1;
    this.lastEventTs = Math.max(this.lastEventTs, event.sighting.timestamp);
    return true;
  }

  markAllRead(): void {
    this.unread = 0;
  }

  setSearch(filters: SightingFilters, results: SightingRecord[]): void {
    this.searchFilters = filters;
    this.searchResults = results;
  }

  setRoute(entryId: string, waypoints: RouteWaypoint[]): void {
    this.routeEntryId = entryId;
    this.routeWaypoints = waypoints;
  }

  /** gap flags: gaps[i] is true when waypoint i+1 is more than
   * `thresholdMinutes` after waypoint i. */
  routeGaps(thresholdMinutes: number): boolean[] {
    const gaps: boolean[] = [];
    for (let i = 0; i + 1 < this.routeWaypoints.length; i += 1) {
      const dt = this.routeWaypoints[i + 1].timestamp - this.routeWaypoints[i].timestamp;
      gaps.push(dt > thresholdMinutes * 60_000);
    }
    return gaps;
  }
}
