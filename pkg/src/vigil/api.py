"""HTTP service: frame ingestion, sighting queries, watchlist CRUD, a
server-sent-event alert stream, and metrics.

Alerts are written to the registry before they are broadcast, so a consumer
never sees a sighting that is not already durable. Each subscriber has a
bounded buffer; a consumer that falls behind is disconnected rather than
allowed to grow memory. Mutating endpoints honor an X-Request-Id header:
retries with the same id replay the original response.

All JSON field names are snake_case; timestamps are epoch milliseconds.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import urllib.parse
from collections import OrderedDict
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import __version__
from .imaging import ImagingError, decode_ppm
from .pipeline import FrameEnvelope, PipelineConfig, build_context, process_frame
from .registry import (
    DuplicateId,
    MatchScore,
    NoAttributes,
    Sighting,
    SightingStore,
    UnknownEntry,
    Watchlist,
    WatchlistEntry,
)

ALERT_BUFFER = 64
REPLAY_CACHE_SIZE = 1024


class BindError(Exception):
    pass


class ApiException(Exception):
    """Maps straight onto the error payload: status in {400,404,409,422,500}."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class AlertEvent:
    match: MatchScore
    sighting: Sighting
    entry: WatchlistEntry
    emitted_at: int

    def to_json(self) -> dict:
        return {
            "match": self.match.to_json(),
            "sighting": self.sighting.to_json(),
            "entry": {
                "id": self.entry.id,
                "description": self.entry.description,
                **self.entry.attributes(),
            },
            "emitted_at": self.emitted_at,
        }


@dataclass
class _Subscriber:
    events: queue.Queue
    dead: bool = False


class AlertBroker:
    """Fan-out with per-subscriber bounded buffers; no replay."""

    def __init__(self, buffer: int = ALERT_BUFFER):
        self._subs: list[_Subscriber] = []
        self._lock = threading.Lock()
        self._buffer = buffer

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber(events=queue.Queue(maxsize=self._buffer))
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber):
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def subscriber_count(self) -> int:
        with self._lock:
            return len(self._subs)

    def publish(self, event: AlertEvent) -> int:
        """Deliver to every live subscriber; slow ones are marked dead and
        dropped. Returns the delivery count."""
        delivered = 0
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            try:
                sub.events.put_nowait(event)
                delivered += 1
            except queue.Full:
                sub.dead = True
                self.unsubscribe(sub)
        return delivered


@dataclass
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 0  # 0 = ephemeral
    data_dir: str = "vigil-data"
    camera_registry: str = ""
    auth_token: str = ""
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


class ApiServer:
    """Owns the store, watchlist, broker, and one pipeline context per
    camera. Frame ingestion over HTTP is a convenience path; heavy streams
    belong on the pipeline's own source."""

    def __init__(self, config: ApiConfig):
        self.config = config
        self.store = SightingStore(config.data_dir)
        self.watchlist = Watchlist(config.data_dir)
        self.broker = AlertBroker()
        self._contexts: dict[str, object] = {}
        self._sequences: dict[str, int] = {}
        self._entry_counter = _max_entry_number(self.watchlist)
        self._lock = threading.Lock()
        self._replay: OrderedDict[str, tuple[int, bytes]] = OrderedDict()
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- pipeline plumbing ---------------------------------------------------

    def _context_for(self, camera: str):
        with self._lock:
            if camera not in self._contexts:
                cfg = self.config.pipeline
                pcfg = PipelineConfig(
                    camera_id=camera,
                    detector=cfg.detector,
                    ocr=cfg.ocr,
                    enable_color=cfg.enable_color,
                    enable_plate=cfg.enable_plate,
                    enable_vmmr=cfg.enable_vmmr,
                    weights=cfg.weights,
                    camera_registry=self.config.camera_registry,
                )
                ctx = build_context(pcfg, store=self.store)
                ctx.watchlist = self.watchlist
                ctx.alert_hook = self._on_match
                self._contexts[camera] = ctx
            return self._contexts[camera]

    def _on_match(self, sighting: Sighting, matches: list[MatchScore]):
        # the sighting is already durable: process_frame records before alerting
        for match in matches:
            event = AlertEvent(
                match=match,
                sighting=sighting,
                entry=self.watchlist.get(match.entry_id),
                emitted_at=int(time.time() * 1000),
            )
            self.broker.publish(event)

    def ingest_frame(self, camera: str, body: bytes) -> dict:
        try:
            frame = decode_ppm(body)
        except ImagingError as e:
            raise ApiException(400, "bad_frame", str(e))
        ctx = self._context_for(camera)
        with self._lock:
            seq = self._sequences.get(camera, 0)
            self._sequences[camera] = seq + 1
        env = FrameEnvelope(frame=frame, capture_ts=int(time.time() * 1000), sequence=seq)
        ctx.frames_in += 1
        sightings = process_frame(env, ctx)
        return {"sequence": seq, "sightings": len(sightings)}

    # -- watchlist -----------------------------------------------------------

    def create_entry(self, payload: dict) -> dict:
        entry = WatchlistEntry(
            id="",
            created_at=int(time.time() * 1000),
            description=payload.get("description", ""),
            make=payload.get("make"),
            model=payload.get("model"),
            color=payload.get("color"),
            plate_text=payload.get("plate_text"),
            plate_type=payload.get("plate_type"),
        )
        try:
            entry.validate()
        except NoAttributes as e:
            raise ApiException(422, "no_attributes", str(e))
        with self._lock:
            self._entry_counter += 1
            entry.id = f"wl-{self._entry_counter:05d}"
        try:
            self.watchlist.add(entry)
        except DuplicateId as e:
            raise ApiException(409, "duplicate_id", str(e))
        return entry.to_json()

    def update_entry(self, entry_id: str, payload: dict) -> dict:
        fields = {
            k: payload[k]
            for k in ("description", "make", "model", "color", "plate_text", "plate_type", "active")
            if k in payload
        }
        try:
            return self.watchlist.update(entry_id, **fields).to_json()
        except UnknownEntry:
            raise ApiException(404, "unknown_entry", entry_id)
        except NoAttributes as e:
            raise ApiException(422, "no_attributes", str(e))

    def deactivate_entry(self, entry_id: str) -> dict:
        try:
            return self.watchlist.deactivate(entry_id).to_json()
        except UnknownEntry:
            raise ApiException(404, "unknown_entry", entry_id)

    # -- metrics ---------------------------------------------------------------

    def metrics(self) -> dict:
        stages: dict[str, dict] = {}
        frames_in = processed = dropped = sightings = alerts = 0
        with self._lock:
            contexts = list(self._contexts.values())
        for ctx in contexts:
            for row in ctx.clock.rows():
                agg = stages.setdefault(row.stage, {"samples": 0, "total_s": 0.0})
                agg["samples"] += row.samples
                agg["total_s"] += row.total
            frames_in += ctx.frames_in
            processed += ctx.frames_processed
            dropped += ctx.frames_dropped
            sightings += ctx.sightings_emitted
            alerts += ctx.alerts_emitted
        rows = [
            {
                "stage": stage,
                "samples": agg["samples"],
                "total_s": agg["total_s"],
                "mean_s": agg["total_s"] / agg["samples"] if agg["samples"] else 0.0,
            }
            for stage, agg in stages.items()
        ]
        return {
            "stages": rows,
            "counters": {
                "frames_in": frames_in,
                "frames_processed": processed,
                "frames_dropped": dropped,
                "sightings": len(self.store),
                "alerts_emitted": alerts,
                "watchlist_entries": len(self.watchlist.entries()),
                "alert_subscribers": self.broker.subscriber_count(),
            },
        }

    # -- replay cache ----------------------------------------------------------
    # lookup/insert is atomic: a retry either replays the finished response,
    # or conflicts with the still-running original (the 409 escape hatch)

    def replay_begin(self, request_id: str):
        """Returns ("run", None) | ("hit", (status, body)) | ("conflict", None)."""
        with self._lock:
            if request_id not in self._replay:
                self._replay[request_id] = None  # in-flight marker
                return ("run", None)
            cached = self._replay[request_id]
            if cached is None:
                return ("conflict", None)
            return ("hit", cached)

    def replay_complete(self, request_id: str, status: int, body: bytes):
        with self._lock:
            self._replay[request_id] = (status, body)
            while len(self._replay) > REPLAY_CACHE_SIZE:
                self._replay.popitem(last=False)

    # -- lifecycle ---------------------------------------------------------------

    def start(self) -> "ApiServer":
        handler = _make_handler(self)
        try:
            self._httpd = ThreadingHTTPServer((self.config.host, self.config.port), handler)
        except OSError as e:
            raise BindError(str(e))
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    def stop(self):
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
        self.store.close()
        self.watchlist.close()


def _max_entry_number(watchlist: Watchlist) -> int:
    best = 0
    for entry in watchlist.entries():
        _, _, tail = entry.id.rpartition("-")
        if tail.isdigit():
            best = max(best, int(tail))
    return best


def serve(config: ApiConfig) -> ApiServer:
    """Start the service; returns the running server handle."""
    return ApiServer(config).start()


# ---------------------------------------------------------------------------
# HTTP plumbing
# ---------------------------------------------------------------------------

def _make_handler(server: ApiServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        # -- helpers ---------------------------------------------------------

        def _send_json(self, status: int, payload, extra_headers: dict | None = None):
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            for k, v in (extra_headers or {}).items():
                self.send_header(k, v)
            self.end_headers()
            self.wfile.write(body)
            return status, body

        def _send_error_json(self, e: ApiException):
            return self._send_json(
                e.status, {"error": {"status": e.status, "code": e.code, "message": e.message}}
            )

        def _body(self) -> bytes:
            length = int(self.headers.get("Content-Length") or 0)
            return self.rfile.read(length) if length else b""

        def _json_body(self) -> dict:
            raw = self._body()
            if not raw:
                return {}
            try:
                payload = json.loads(raw.decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                raise ApiException(400, "bad_json", "request body is not valid JSON")
            if not isinstance(payload, dict):
                raise ApiException(400, "bad_json", "expected a JSON object")
            return payload

        def _authorized(self) -> bool:
            token = server.config.auth_token
            if not token:
                return True
            return self.headers.get("Authorization") == f"Bearer {token}"

        def _route(self) -> tuple[str, dict]:
            parsed = urllib.parse.urlparse(self.path)
            params = {k: v[0] for k, v in urllib.parse.parse_qs(parsed.query).items()}
            return parsed.path.rstrip("/") or "/", params

        def _send_raw(self, status: int, body: bytes, replayed: bool = False):
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            if replayed:
                self.send_header("X-Replayed", "1")
            self.end_headers()
            self.wfile.write(body)

        def _mutate(self, build):
            """Run a mutating handler with X-Request-Id replay semantics: a
            retry of a finished request replays its exact response; a
            duplicate of one still in flight gets 409. `build` returns
            (status, payload) without touching the socket — the response is
            cached before the first byte reaches the client, so a retry can
            never race the cache."""
            request_id = self.headers.get("X-Request-Id")
            if request_id:
                outcome, cached = server.replay_begin(request_id)
                if outcome == "hit":
                    self._send_raw(*cached, replayed=True)
                    return
                if outcome == "conflict":
                    self._send_error_json(
                        ApiException(409, "in_flight", "request id is still being processed")
                    )
                    return
            try:
                status, payload = build()
            except ApiException as e:
                status = e.status
                payload = {"error": {"status": e.status, "code": e.code, "message": e.message}}
            body = json.dumps(payload).encode("utf-8")
            if request_id:
                server.replay_complete(request_id, status, body)
            self._send_raw(status, body)

        # -- verbs ------------------------------------------------------------

        def do_GET(self):
            path, params = self._route()
            try:
                if path == "/healthz":
                    self._send_json(200, {"version": __version__})
                    return
                if not self._authorized():
                    raise ApiException(400, "unauthorized", "missing or bad bearer token")
                if path == "/sightings":
                    self._get_sightings(params)
                elif path == "/watchlist":
                    self._send_json(200, [e.to_json() for e in server.watchlist.entries()])
                elif path.startswith("/watchlist/") and path.endswith("/route"):
                    self._get_route(path.split("/")[2], params)
                elif path == "/alerts":
                    self._stream_alerts()
                elif path == "/metrics":
                    self._send_json(200, server.metrics())
                else:
                    raise ApiException(404, "not_found", path)
            except ApiException as e:
                self._send_error_json(e)
            except BrokenPipeError:
                pass

        def do_POST(self):
            path, params = self._route()
            if not self._authorized():
                self._send_error_json(ApiException(400, "unauthorized", "missing or bad bearer token"))
                return
            if path == "/frames":
                camera = params.get("camera")
                body = self._body()

                def ingest():
                    if not camera:
                        raise ApiException(400, "missing_camera", "camera query parameter required")
                    return 202, server.ingest_frame(camera, body)

                self._mutate(ingest)
            elif path == "/watchlist":
                try:
                    payload = self._json_body()
                except ApiException as e:
                    self._send_error_json(e)
                    return
                self._mutate(lambda: (201, server.create_entry(payload)))
            else:
                self._send_error_json(ApiException(404, "not_found", path))

        def do_PATCH(self):
            path, _ = self._route()
            if not self._authorized():
                self._send_error_json(ApiException(400, "unauthorized", "missing or bad bearer token"))
                return
            if path.startswith("/watchlist/"):
                entry_id = path.rsplit("/", 1)[1]
                try:
                    payload = self._json_body()
                except ApiException as e:
                    self._send_error_json(e)
                    return
                self._mutate(lambda: (200, server.update_entry(entry_id, payload)))
            else:
                self._send_error_json(ApiException(404, "not_found", path))

        def do_DELETE(self):
            path, _ = self._route()
            if not self._authorized():
                self._send_error_json(ApiException(400, "unauthorized", "missing or bad bearer token"))
                return
            if path.startswith("/watchlist/"):
                entry_id = path.rsplit("/", 1)[1]
                self._mutate(lambda: (200, server.deactivate_entry(entry_id)))
            else:
                self._send_error_json(ApiException(404, "not_found", path))

        # -- endpoint bodies ---------------------------------------------------

        def _get_sightings(self, params: dict):
            kwargs = {}
            if "from" in params:
                kwargs["ts_from"] = int(params["from"])
            if "to" in params:
                kwargs["ts_to"] = int(params["to"])
            if "camera" in params:
                kwargs["cameras"] = params["camera"].split(",")
            if "plate_like" in params:
                kwargs["plate_like"] = params["plate_like"]
            for attr in ("make", "model", "color", "plate_type"):
                if attr in params:
                    kwargs[attr] = params[attr]
            try:
                rows = server.store.query(**kwargs)
            except ValueError as e:
                raise ApiException(400, "bad_query", str(e))
            self._send_json(200, [s.to_json() for s in rows])

        def _get_route(self, entry_id: str, params: dict):
            from .registry import route

            try:
                waypoints = route(entry_id, server.store, server.watchlist)
            except UnknownEntry:
                raise ApiException(404, "unknown_entry", entry_id)
            self._send_json(
                200,
                [
                    {
                        "timestamp": w.timestamp,
                        "camera_id": w.camera_id,
                        "sighting_id": w.sighting_id,
                        "location": w.location.to_json() if w.location else None,
                    }
                    for w in waypoints
                ],
            )

        def _stream_alerts(self):
            sub = server.broker.subscribe()
            try:
                self.send_response(200)
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(b": connected\n\n")
                self.wfile.flush()
                while not sub.dead:
                    try:
                        event = sub.events.get(timeout=1.0)
                    except queue.Empty:
                        self.wfile.write(b": keep-alive\n\n")
                        self.wfile.flush()
                        continue
                    data = json.dumps(event.to_json())
                    self.wfile.write(f"event: match\ndata: {data}\n\n".encode("utf-8"))
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                server.broker.unsubscribe(sub)

    return Handler
