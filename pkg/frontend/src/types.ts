/** Wire types for the surveillance API. All timestamps are epoch milliseconds. */

export interface LocationRecord {
  site: string | null;
  lat: number | null;
  lon: number | null;
}

export interface SightingRecord {
  id: string;
  camera_id: string;
  timestamp: number;
  location: LocationRecord | null;
  make: string | null;
  model: string | null;
  color: string | null;
  plate_text: string | null;
  plate_type: string | null;
  confidences: Record<string, number>;
  crop_ref: string | null;
}

export interface WatchlistEntryRecord {
  id: string;
  created_at: number;
  description: string;
  make: string | null;
  model: string | null;
  color: string | null;
  plate_text: string | null;
  plate_type: string | null;
  active: boolean;
}

export interface MatchRecord {
  sighting_id: string;
  entry_id: string;
  score: number;
  attributes_compared: number;
  matched: boolean;
}

export interface AlertEventRecord {
  match: MatchRecord;
  sighting: SightingRecord;
  entry: { id: string; description: string } & Partial<
    Pick<WatchlistEntryRecord, "make" | "model" | "color" | "plate_text" | "plate_type">
  >;
  emitted_at: number;
}

export interface RouteWaypoint {
  timestamp: number;
  camera_id: string;
  sighting_id: string;
  location: LocationRecord | null;
}

/** Attribute fields an entry draft may carry (at least one required). */
export const ENTRY_ATTRIBUTES = ["make", "model", "color", "plate_text", "plate_type"] as const;
export type EntryAttribute = (typeof ENTRY_ATTRIBUTES)[number];

export interface EntryDraft {
  description?: string;
  make?: string;
  model?: string;
  color?: string;
  plate_text?: string;
  plate_type?: string;
}

export interface SightingFilters {
  from?: number;
  to?: number;
  camera?: string;
  color?: string;
  make?: string;
  model?: string;
  plate_type?: string;
  plate_like?: string;
}

export interface ApiErrorPayload {
  status: number;
  code: string;
  message: string;
}
