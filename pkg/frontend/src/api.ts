/** Thin typed client over the HTTP API. Every mutation the console performs
 * goes through here — nothing else talks to the network. */

import type {
  ApiErrorPayload,
  EntryDraft,
  RouteWaypoint,
  SightingFilters,
  SightingRecord,
  WatchlistEntryRecord,
} from "./types.js";
import { filtersToQuery } from "./url.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(payload: ApiErrorPayload) {
    super(payload.message);
    this.status = payload.status;
    this.code = payload.code;
  }
}

export interface ApiClientOptions {
  token?: string;
  fetchImpl?: typeof fetch;
}

export class ApiClient {
  readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchImpl: typeof fetch;
  /** Request log so tests can verify the console only uses documented endpoints. */
  readonly requestLog: { method: string; path: string }[] = [];

  constructor(baseUrl: string, options: ApiClientOptions = {}) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  private async request<T>(method: string, path: string, body?: unknown, requestId?: string): Promise<T> {
    this.requestLog.push({ method, path });
    const headers: Record<string, string> = { Accept: "application/json" };
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (requestId) headers["X-Request-Id"] = requestId;
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    const payload = text ? JSON.parse(text) : null;
    if (!resp.ok) {
      const error = payload?.error ?? { status: resp.status, code: "http_error", message: text };
      throw new ApiError(error);
    }
    return payload as T;
  }

  health(): Promise<{ version: string }> {
    return this.request("GET", "/healthz");
  }

  listWatchlist(): Promise<WatchlistEntryRecord[]> {
    return this.request("GET", "/watchlist");
  }

  createEntry(draft: EntryDraft, requestId?: string): Promise<WatchlistEntryRecord> {
    return this.request("POST", "/watchlist", draft, requestId);
  }

  updateEntry(id: string, patch: Partial<EntryDraft> & { active?: boolean }): Promise<WatchlistEntryRecord> {
    return this.request("PATCH", `/watchlist/${id}`, patch);
  }

  deactivateEntry(id: string): Promise<WatchlistEntryRecord> {
    return this.request("DELETE", `/watchlist/${id}`);
  }

  sightings(filters: SightingFilters = {}): Promise<SightingRecord[]> {
    const query = filtersToQuery(filters);
    return this.request("GET", query ? `/sightings?${query}` : "/sightings");
  }

  route(entryId: string): Promise<RouteWaypoint[]> {
    return this.request("GET", `/watchlist/${entryId}/route`);
  }

  alertsUrl(): string {
    return `${this.baseUrl}/alerts`;
  }
}
