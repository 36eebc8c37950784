"""Durable sighting store, watchlist, partial-attribute matching, and route
reconstruction.

Persistence is an append-only line-delimited JSON log per store (sightings
and watchlist entries in separate files), schema-versioned with a `v` field.
Opening a store replays the log into an in-memory index; a torn final line
(crash mid-append) is dropped, everything before it is kept. One serialized
writer, any number of readers.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

SCHEMA_VERSION = 1

# attribute agreement weights; plate distance-1 matches earn 0.8 of the weight
MATCH_WEIGHTS = {
    "plate_text": 0.45,
    "model": 0.20,
    "make": 0.15,
    "color": 0.12,
    "plate_type": 0.08,
}
MATCH_THRESHOLD = 0.75
MIN_ATTRIBUTES_COMPARED = 2
NEAR_PLATE_CREDIT = 0.8
DEFAULT_DWELL_MS = 60_000

ATTRIBUTE_FIELDS = tuple(MATCH_WEIGHTS)


class RegistryError(Exception):
    pass


class DuplicateId(RegistryError):
    pass


class NoAttributes(RegistryError):
    pass


class UnknownEntry(RegistryError):
    pass


class StoreCorrupt(RegistryError):
    pass


@dataclass
class Location:
    site: str | None = None
    lat: float | None = None
    lon: float | None = None

    def to_json(self) -> dict:
        return {"site": self.site, "lat": self.lat, "lon": self.lon}

    @staticmethod
    def from_json(d: dict | None) -> "Location | None":
        if d is None:
            return None
        return Location(site=d.get("site"), lat=d.get("lat"), lon=d.get("lon"))


@dataclass
class Sighting:
    id: str
    camera_id: str
    timestamp: int  # UTC epoch milliseconds
    location: Location | None = None
    make: str | None = None
    model: str | None = None
    color: str | None = None
    plate_text: str | None = None
    plate_type: str | None = None
    confidences: dict[str, float] = field(default_factory=dict)
    crop_ref: str | None = None

    def attributes(self) -> dict[str, str]:
        return {
            k: getattr(self, k) for k in ATTRIBUTE_FIELDS if getattr(self, k) is not None
        }

    def validate(self):
        if self.timestamp <= 0:
            raise ValueError("timestamp must be positive epoch milliseconds")
        if not self.camera_id:
            raise ValueError("camera_id required")
        if not self.attributes():
            raise NoAttributes("a sighting needs at least one attribute")

    def to_json(self) -> dict:
        return {
            "v": SCHEMA_VERSION,
            "id": self.id,
            "camera_id": self.camera_id,
            "timestamp": self.timestamp,
            "location": self.location.to_json() if self.location else None,
            "make": self.make,
            "model": self.model,
            "color": self.color,
            "plate_text": self.plate_text,
            "plate_type": self.plate_type,
            "confidences": self.confidences,
            "crop_ref": self.crop_ref,
        }

    @staticmethod
    def from_json(d: dict) -> "Sighting":
        return Sighting(
            id=d["id"],
            camera_id=d["camera_id"],
            timestamp=d["timestamp"],
            location=Location.from_json(d.get("location")),
            make=d.get("make"),
            model=d.get("model"),
            color=d.get("color"),
            plate_text=d.get("plate_text"),
            plate_type=d.get("plate_type"),
            confidences=d.get("confidences") or {},
            crop_ref=d.get("crop_ref"),
        )


@dataclass
class WatchlistEntry:
    id: str
    created_at: int
    description: str = ""
    make: str | None = None
    model: str | None = None
    color: str | None = None
    plate_text: str | None = None
    plate_type: str | None = None
    active: bool = True

    def attributes(self) -> dict[str, str]:
        return {
            k: getattr(self, k) for k in ATTRIBUTE_FIELDS if getattr(self, k) is not None
        }

    def validate(self):
        if not self.attributes():
            raise NoAttributes("a watchlist entry needs at least one target attribute")

    def to_json(self) -> dict:
        return {
            "v": SCHEMA_VERSION,
            "id": self.id,
            "created_at": self.created_at,
            "description": self.description,
            "make": self.make,
            "model": self.model,
            "color": self.color,
            "plate_text": self.plate_text,
            "plate_type": self.plate_type,
            "active": self.active,
        }

    @staticmethod
    def from_json(d: dict) -> "WatchlistEntry":
        return WatchlistEntry(
            id=d["id"],
            created_at=d["created_at"],
            description=d.get("description", ""),
            make=d.get("make"),
            model=d.get("model"),
            color=d.get("color"),
            plate_text=d.get("plate_text"),
            plate_type=d.get("plate_type"),
            active=d.get("active", True),
        )


@dataclass
class MatchScore:
    sighting_id: str
    entry_id: str
    score: float
    attributes_compared: int
    matched: bool

    def to_json(self) -> dict:
        return {
            "sighting_id": self.sighting_id,
            "entry_id": self.entry_id,
            "score": self.score,
            "attributes_compared": self.attributes_compared,
            "matched": self.matched,
        }


# ---------------------------------------------------------------------------
# Append-only log
# ---------------------------------------------------------------------------

def _read_log(path: Path) -> list[dict]:
    """Replay a JSONL log. The final record may be torn (a crash mid-append
    cannot damage anything else) and is silently dropped; an unreadable
    record anywhere earlier is a hard error."""
    if not path.exists():
        return []
    raw = path.read_bytes()
    if not raw:
        return []
    items = [(i, line) for i, line in enumerate(raw.split(b"\n")) if line.strip()]
    records = []
    for pos, (i, line) in enumerate(items):
        try:
            records.append(json.loads(line.decode("utf-8")))
        except (json.JSONDecodeError, UnicodeDecodeError):
            if pos == len(items) - 1:
                break  # torn final record
            raise StoreCorrupt(f"{path}: unreadable record at line {i + 1}")
    return records


class _AppendLog:
    def __init__(self, path: Path):
        self.path = path
        self._fh = open(path, "ab")
        self._lock = threading.Lock()

    def append(self, record: dict):
        data = json.dumps(record, separators=(",", ":")).encode("utf-8") + b"\n"
        with self._lock:
            self._fh.write(data)
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self):
        with self._lock:
            self._fh.close()


class SightingStore:
    """In-memory index over the sightings log; writes append-then-index."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._path = self.data_dir / "sightings.jsonl"
        self._sightings: list[Sighting] = [Sighting.from_json(r) for r in _read_log(self._path)]
        self._ids = {s.id for s in self._sightings}
        if len(self._ids) != len(self._sightings):
            raise StoreCorrupt("duplicate sighting ids in log")
        self._log = _AppendLog(self._path)
        self._lock = threading.Lock()

    def record_sighting(self, s: Sighting) -> str:
        s.validate()
        with self._lock:
            if s.id in self._ids:
                raise DuplicateId(s.id)
            self._log.append(s.to_json())
            self._sightings.append(s)
            self._ids.add(s.id)
        return s.id

    def all(self) -> list[Sighting]:
        with self._lock:
            return list(self._sightings)

    def __len__(self) -> int:
        return len(self._sightings)

    def get(self, sighting_id: str) -> Sighting:
        for s in self._sightings:
            if s.id == sighting_id:
                return s
        raise UnknownEntry(sighting_id)

    def query(
        self,
        ts_from: int | None = None,
        ts_to: int | None = None,
        cameras: list[str] | None = None,
        plate_like: str | None = None,
        **attribute_equals: str,
    ) -> list[Sighting]:
        """Conjunctive filter; results in (timestamp, insertion order).
        Absent attributes never satisfy an equality filter."""
        for k in attribute_equals:
            if k not in ATTRIBUTE_FIELDS:
                raise ValueError(f"unknown attribute filter {k!r}")
        camera_set = set(cameras) if cameras else None
        out = []
        with self._lock:
            snapshot = list(self._sightings)
        for s in snapshot:
            if ts_from is not None and s.timestamp < ts_from:
                continue
            if ts_to is not None and s.timestamp > ts_to:
                continue
            if camera_set is not None and s.camera_id not in camera_set:
                continue
            if plate_like is not None:
                if s.plate_text is None or plate_like.casefold() not in s.plate_text.casefold():
                    continue
            ok = True
            for k, v in attribute_equals.items():
                have = getattr(s, k)
                if have is None or have.casefold() != str(v).casefold():
                    ok = False
                    break
            if ok:
                out.append(s)
        out.sort(key=lambda s: s.timestamp)  # stable: insertion order breaks ties
        return out

    def close(self):
        self._log.close()


class Watchlist:
    """Watchlist entries over their own append-only log; latest record wins."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._path = self.data_dir / "watchlist.jsonl"
        self._entries: dict[str, WatchlistEntry] = {}
        self._order: list[str] = []
        for rec in _read_log(self._path):
            e = WatchlistEntry.from_json(rec)
            if e.id not in self._entries:
                self._order.append(e.id)
            self._entries[e.id] = e
        self._log = _AppendLog(self._path)
        self._lock = threading.Lock()

    def add(self, entry: WatchlistEntry) -> str:
        entry.validate()
        with self._lock:
            if entry.id in self._entries:
                raise DuplicateId(entry.id)
            self._log.append(entry.to_json())
            self._entries[entry.id] = entry
            self._order.append(entry.id)
        return entry.id

    def get(self, entry_id: str) -> WatchlistEntry:
        try:
            return self._entries[entry_id]
        except KeyError:
            raise UnknownEntry(entry_id)

    def update(self, entry_id: str, **fields) -> WatchlistEntry:
        """Update target attributes/description; id and created_at persist."""
        with self._lock:
            if entry_id not in self._entries:
                raise UnknownEntry(entry_id)
            updated = replace(self._entries[entry_id], **fields)
            updated.validate()
            self._log.append(updated.to_json())
            self._entries[entry_id] = updated
            return updated

    def deactivate(self, entry_id: str) -> WatchlistEntry:
        return self.update(entry_id, active=False)

    def entries(self, active_only: bool = False) -> list[WatchlistEntry]:
        out = [self._entries[i] for i in self._order]
        return [e for e in out if e.active] if active_only else out

    def close(self):
        self._log.close()


# ---------------------------------------------------------------------------
# Matching and routes
# ---------------------------------------------------------------------------

def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance (insert/delete/substitute, unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _attr_credit(key: str, a: str, b: str, plate_tolerance: int) -> float:
    """Fraction of the attribute weight earned by this comparison."""
    a, b = a.casefold(), b.casefold()
    if a == b:
        return 1.0
    if key == "plate_text" and plate_tolerance > 0 and edit_distance(a, b) <= plate_tolerance:
        return NEAR_PLATE_CREDIT
    return 0.0


def score_match(
    sighting: Sighting,
    entry: WatchlistEntry,
    threshold: float = MATCH_THRESHOLD,
    plate_tolerance: int = 1,
) -> MatchScore:
    """Weighted agreement over attributes present in both records."""
    s_attrs = sighting.attributes()
    e_attrs = entry.attributes()
    compared = [k for k in ATTRIBUTE_FIELDS if k in s_attrs and k in e_attrs]
    total_weight = sum(MATCH_WEIGHTS[k] for k in compared)
    earned = sum(
        MATCH_WEIGHTS[k] * _attr_credit(k, s_attrs[k], e_attrs[k], plate_tolerance)
        for k in compared
    )
    score = earned / total_weight if total_weight > 0 else 0.0
    return MatchScore(
        sighting_id=sighting.id,
        entry_id=entry.id,
        score=score,
        attributes_compared=len(compared),
        matched=score >= threshold and len(compared) >= MIN_ATTRIBUTES_COMPARED,
    )


def match_watchlist(
    sighting: Sighting,
    entries: list[WatchlistEntry],
    threshold: float = MATCH_THRESHOLD,
    plate_tolerance: int = 1,
) -> list[MatchScore]:
    return [
        score_match(sighting, e, threshold, plate_tolerance) for e in entries if e.active
    ]


@dataclass
class Waypoint:
    timestamp: int
    location: Location | None
    sighting_id: str
    camera_id: str


def route(
    entry_id: str,
    store: SightingStore,
    watchlist: Watchlist,
    dwell_ms: int = DEFAULT_DWELL_MS,
    threshold: float = MATCH_THRESHOLD,
) -> list[Waypoint]:
    """Time-ordered waypoints of all sightings matching one entry. Repeated
    hits on the same camera within the dwell window collapse into one."""
    entry = watchlist.get(entry_id)
    matched = [
        s
        for s in store.query()
        if score_match(s, entry, threshold=threshold).matched
    ]
    waypoints: list[Waypoint] = []
    last: Waypoint | None = None
    last_ts = 0
    for s in matched:
        if (
            last is not None
            and s.camera_id == last.camera_id
            and s.timestamp - last_ts <= dwell_ms
        ):
            last_ts = s.timestamp  # same dwell episode; extend it
            continue
        last = Waypoint(
            timestamp=s.timestamp,
            location=s.location,
            sighting_id=s.id,
            camera_id=s.camera_id,
        )
        last_ts = s.timestamp
        waypoints.append(last)
    return waypoints


def parse_camera_registry(path: str | Path) -> dict[str, Location]:
    """Key-value file: `camera_id = site[,lat,lon]`; '#' starts a comment."""
    registry = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        parts = [p.strip() for p in value.split(",")]
        loc = Location(site=parts[0] or None)
        if len(parts) >= 3:
            loc.lat, loc.lon = float(parts[1]), float(parts[2])
        registry[key.strip()] = loc
    return registry
