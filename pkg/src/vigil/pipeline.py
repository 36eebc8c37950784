"""Frame source -> detection -> per-region extraction -> sighting emission,
with per-stage wall-clock accounting and a bounded-queue real-time policy.

Extractors are independent by contract: a plate that cannot be found never
suppresses the color or make/model attributes of the same region. Frames
flow through a bounded queue in threaded mode; overflow drops the oldest
queued frame and counts it. Single-threaded mode produces identical
sightings and exists for determinism testing.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__  # noqa: F401  (re-exported in reports)
from .color import classify_vehicle_color
from .detect import Detector, make_detector
from .imaging import Frame, Rect, crop, decode_ppm, resize_bilinear
from .plate import LocateConfig, NoGlyphs, NoPlateFound, make_ocr, read_plate
from .plate.geometry import DegenerateQuad
from .registry import (
    Location,
    MatchScore,
    Sighting,
    SightingStore,
    Watchlist,
    match_watchlist,
    parse_camera_registry,
)
from .vmmr import forward, top_k
from .vmmr.sanity import make_sanity_model

STAGE_ORDER = ("detection", "plate", "vmmr", "color")


class SourceError(Exception):
    pass


class ConfigError(Exception):
    pass


class NoSamples(Exception):
    pass


@dataclass
class StageTiming:
    stage: str
    samples: int
    total: float

    @property
    def mean(self) -> float:
        return self.total / self.samples if self.samples else 0.0


class StageClock:
    """Thread-safe per-stage wall time accumulator."""

    def __init__(self):
        self._totals: dict[str, float] = {}
        self._samples: dict[str, int] = {}
        self._lock = threading.Lock()

    def add(self, stage: str, dt: float):
        with self._lock:
            self._totals[stage] = self._totals.get(stage, 0.0) + dt
            self._samples[stage] = self._samples.get(stage, 0) + 1

    def rows(self) -> list[StageTiming]:
        with self._lock:
            return [
                StageTiming(stage, self._samples[stage], self._totals[stage])
                for stage in STAGE_ORDER
                if self._samples.get(stage)
            ]


@dataclass
class FrameEnvelope:
    frame: Frame
    capture_ts: int  # epoch ms
    sequence: int


@dataclass
class PipelineConfig:
    source: str = ""
    camera_id: str = "cam-0"
    detector: str = "motion"
    ocr: str = "template"
    queue_capacity: int = 8
    drop_policy: str = "drop-oldest"
    enable_color: bool = True
    enable_plate: bool = True
    enable_vmmr: bool = False
    weights: str = ""  # weight file path, or "sanity" for the built-in model
    data_dir: str = ""
    camera_registry: str = ""
    threads: bool = False
    frame_interval_ms: int = 100
    start_ts: int = 1_000_000
    stage_delay_s: float = 0.0  # deliberate slowdown for backpressure stress

    _BOOLS = {"enable_color", "enable_plate", "enable_vmmr", "threads"}
    _INTS = {"queue_capacity", "frame_interval_ms", "start_ts"}
    _FLOATS = {"stage_delay_s"}

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Flat key=value text; '#' starts a comment."""
        cfg = cls()
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not hasattr(cfg, key) or key.startswith("_"):
                raise ConfigError(f"line {lineno}: bad or unknown key {line!r}")
            if key in cls._BOOLS:
                setattr(cfg, key, value.lower() in ("1", "true", "yes", "on"))
            elif key in cls._INTS:
                setattr(cfg, key, int(value))
            elif key in cls._FLOATS:
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
        if cfg.queue_capacity < 1:
            raise ConfigError("queue_capacity must be >= 1")
        return cfg


AlertHook = Callable[[Sighting, list[MatchScore]], None]


@dataclass
class PipelineContext:
    detector: Detector
    store: SightingStore | None
    camera_id: str
    clock: StageClock = field(default_factory=StageClock)
    watchlist: Watchlist | None = None
    camera_sites: dict[str, Location] = field(default_factory=dict)
    locate_cfg: LocateConfig = field(default_factory=LocateConfig)
    ocr_engine: Callable = None
    vmmr_model: tuple | None = None  # (ArchitectureSpec, WeightBundle)
    enable_color: bool = True
    enable_plate: bool = True
    enable_vmmr: bool = False
    alert_hook: AlertHook | None = None
    stage_delay_s: float = 0.0
    frames_in: int = 0
    frames_processed: int = 0
    frames_dropped: int = 0
    sightings_emitted: int = 0
    alerts_emitted: int = 0

    def location(self) -> Location | None:
        return self.camera_sites.get(self.camera_id)


def build_context(config: PipelineConfig, store: SightingStore | None = None) -> PipelineContext:
    ctx = PipelineContext(
        detector=make_detector(config.detector),
        store=store,
        camera_id=config.camera_id,
        enable_color=config.enable_color,
        enable_plate=config.enable_plate,
        enable_vmmr=config.enable_vmmr,
        ocr_engine=make_ocr(config.ocr),
        stage_delay_s=config.stage_delay_s,
    )
    if config.camera_registry:
        ctx.camera_sites = parse_camera_registry(config.camera_registry)
    if config.enable_vmmr:
        if config.weights == "sanity" or not config.weights:
            ctx.vmmr_model = make_sanity_model()
        else:
            from .vmmr.weights import load_model

            ctx.vmmr_model = load_model(config.weights)
    return ctx


def _extract_plate(ctx: PipelineContext, region_crop: Frame) -> dict:
    readout = read_plate(region_crop, ctx.locate_cfg, ocr=ctx.ocr_engine)
    return {
        "plate_text": readout.text,
        "plate_type": readout.plate_type,
        "confidence": readout.confidence,
    }


def _extract_color(ctx: PipelineContext, region_crop: Frame) -> dict:
    name, fraction = classify_vehicle_color(region_crop)
    return {"color": name.name, "confidence": fraction}


def _extract_vmmr(ctx: PipelineContext, region_crop: Frame) -> dict:
    spec, bundle = ctx.vmmr_model
    resized = resize_bilinear(region_crop, spec.input_resolution, spec.input_resolution)
    pred = forward(spec, bundle, resized)
    best = top_k(pred, 1)[0]
    label = (bundle.labels or [])[best] if bundle.labels and best < len(bundle.labels) else str(best)
    make_name, _, model_name = label.partition(" ")
    return {
        "make": make_name,
        "model": model_name or str(best),
        "confidence": float(pred.probabilities[0]),
    }


# extractor table; tests monkeypatch entries to inject faults
EXTRACTORS: dict[str, Callable[[PipelineContext, Frame], dict]] = {
    "plate": _extract_plate,
    "color": _extract_color,
    "vmmr": _extract_vmmr,
}

_EXPECTED_EXTRACTOR_ERRORS = (NoPlateFound, NoGlyphs, DegenerateQuad)


def process_frame(env: FrameEnvelope, ctx: PipelineContext) -> list[Sighting]:
    """Detect regions, run the enabled extractors independently on each, and
    record one sighting per region. An extractor failure only blanks its own
    attributes."""
    t0 = time.perf_counter()
    regions = ctx.detector.detect(env.frame)
    ctx.clock.add("detection", time.perf_counter() - t0)
    if ctx.stage_delay_s:
        time.sleep(ctx.stage_delay_s)

    enabled = [
        ("plate", ctx.enable_plate),
        ("vmmr", ctx.enable_vmmr and ctx.vmmr_model is not None),
        ("color", ctx.enable_color),
    ]
    sightings = []
    for idx, region in enumerate(regions):
        region_crop = crop(env.frame, region.bbox)
        attrs: dict = {}
        confidences: dict[str, float] = {}
        for stage, on in enabled:
            if not on:
                continue
            t0 = time.perf_counter()
            try:
                result = EXTRACTORS[stage](ctx, region_crop)
            except _EXPECTED_EXTRACTOR_ERRORS:
                result = {}
            ctx.clock.add(stage, time.perf_counter() - t0)
            conf = result.pop("confidence", None)
            if result:
                attrs.update(result)
                if conf is not None:
                    for key in result:
                        confidences[key] = float(conf)
        if not attrs:
            continue  # a sighting must carry at least one attribute
        sighting = Sighting(
            id=f"{ctx.camera_id}-{env.sequence:06d}-{idx}",
            camera_id=ctx.camera_id,
            timestamp=env.capture_ts,
            location=ctx.location(),
            confidences=confidences,
            **attrs,
        )
        if ctx.store is not None:
            ctx.store.record_sighting(sighting)
        ctx.sightings_emitted += 1
        sightings.append(sighting)
        if ctx.watchlist is not None:
            matches = [
                m
                for m in match_watchlist(sighting, ctx.watchlist.entries(active_only=True))
                if m.matched
            ]
            if matches:
                ctx.alerts_emitted += len(matches)
                if ctx.alert_hook is not None:
                    ctx.alert_hook(sighting, matches)
    ctx.frames_processed += 1
    return sightings


def latency_report(ctx: PipelineContext) -> list[StageTiming]:
    """Per-stage means over all samples, in fixed report order."""
    rows = ctx.clock.rows()
    if not rows:
        raise NoSamples("no frames processed yet")
    return rows


@dataclass
class RunReport:
    timings: list[StageTiming]
    frames_in: int
    frames_processed: int
    frames_dropped: int
    sightings: int
    alerts: int

    @property
    def pipeline_latency_s(self) -> float:
        return sum(t.mean for t in self.timings)

    def render(self) -> str:
        lines = [("Stage", "Samples", "Total (s)", "Average Time (s)")]
        for t in self.timings:
            lines.append((t.stage, str(t.samples), f"{t.total:.4f}", f"{t.mean:.4f}"))
        widths = [max(len(r[i]) for r in lines) for i in range(4)]
        out = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in lines
        ]
        out.append(f"pipeline latency (sum of stage means): {self.pipeline_latency_s:.4f} s")
        out.append(
            f"frames in={self.frames_in} processed={self.frames_processed} "
            f"dropped={self.frames_dropped} sightings={self.sightings} alerts={self.alerts}"
        )
        return "\n".join(out)


def iter_source_envelopes(config: PipelineConfig):
    """Yield FrameEnvelopes from a directory of PPMs (sorted) or one file."""
    src = Path(config.source)
    if src.is_dir():
        paths = sorted(src.glob("*.ppm"))
    elif src.is_file():
        paths = [src]
    else:
        raise SourceError(f"source {config.source!r} is not a file or directory")
    if not paths:
        raise SourceError(f"no .ppm frames under {config.source!r}")
    for seq, path in enumerate(paths):
        frame = decode_ppm(path.read_bytes())
        yield FrameEnvelope(
            frame=frame,
            capture_ts=config.start_ts + seq * config.frame_interval_ms,
            sequence=seq,
        )


class _DropOldestQueue:
    """Bounded FIFO; putting into a full queue evicts the oldest item."""

    def __init__(self, capacity: int):
        self._items: deque = deque()
        self._capacity = capacity
        self._cond = threading.Condition()
        self.dropped = 0
        self._closed = False

    def put(self, item):
        with self._cond:
            if len(self._items) >= self._capacity:
                self._items.popleft()
                self.dropped += 1
            self._items.append(item)
            self._cond.notify()

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def get(self):
        with self._cond:
            while not self._items and not self._closed:
                self._cond.wait(0.1)
            if self._items:
                return self._items.popleft()
            return None  # closed and drained


def run(
    config: PipelineConfig,
    store: SightingStore | None = None,
    watchlist: Watchlist | None = None,
    alert_hook: AlertHook | None = None,
) -> RunReport:
    """Stream the configured source through the pipeline and report."""
    ctx = build_context(config, store=store)
    ctx.watchlist = watchlist
    ctx.alert_hook = alert_hook

    if config.threads:
        queue = _DropOldestQueue(config.queue_capacity)

        def reader():
            try:
                for env in iter_source_envelopes(config):
                    ctx.frames_in += 1
                    queue.put(env)
            finally:
                queue.close()

        t = threading.Thread(target=reader, name="vigil-source", daemon=True)
        t.start()
        while True:
            env = queue.get()
            if env is None:
                break
            process_frame(env, ctx)
        t.join()
        ctx.frames_dropped = queue.dropped
    else:
        for env in iter_source_envelopes(config):
            ctx.frames_in += 1
            process_frame(env, ctx)

    return RunReport(
        timings=ctx.clock.rows(),
        frames_in=ctx.frames_in,
        frames_processed=ctx.frames_processed,
        frames_dropped=ctx.frames_dropped,
        sightings=ctx.sightings_emitted,
        alerts=ctx.alerts_emitted,
    )
