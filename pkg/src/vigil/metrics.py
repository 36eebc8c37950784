"""Confusion-count metrics, report aggregation, and the corpus benchmark
harness.

The overall row of a report is the unweighted column mean of the module
rows, except the time column, which sums: stages run sequentially, so the
pipeline latency is the sum of per-stage means. Metrics with zero
denominators are reported as undefined and excluded from the means.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MetricsError(Exception):
    pass


class EmptyCounts(MetricsError):
    pass


class EmptyRows(MetricsError):
    pass


class ManifestMissing(MetricsError):
    pass


class CorpusEmpty(MetricsError):
    pass


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass
class ModuleReport:
    name: str
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    specificity: float | None
    avg_time_s: float = 0.0

    METRIC_FIELDS = ("accuracy", "precision", "recall", "f1", "specificity")

    def metric(self, field_name: str) -> float | None:
        return getattr(self, field_name)


@dataclass
class OverallReport:
    rows: list[ModuleReport]
    overall: ModuleReport
    extras: dict = field(default_factory=dict)  # per-char counts etc.


def _ratio(num: int, denom: int) -> float | None:
    return num / denom if denom > 0 else None


def metrics_from_counts(name: str, c: ConfusionCounts, avg_time_s: float = 0.0) -> ModuleReport:
    """accuracy, precision, recall, F1 (harmonic mean), specificity."""
    if c.total == 0:
        raise EmptyCounts(f"{name}: no observations")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    if precision is not None and recall is not None and (precision + recall) > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = None
    return ModuleReport(
        name=name,
        accuracy=_ratio(c.tp + c.tn, c.total),
        precision=precision,
        recall=recall,
        f1=f1,
        specificity=_ratio(c.tn, c.tn + c.fp),
        avg_time_s=avg_time_s,
    )


def aggregate_overall(rows: list[ModuleReport]) -> OverallReport:
    """Column-wise unweighted means over defined values; time column summed."""
    if not rows:
        raise EmptyRows("nothing to aggregate")
    means = {}
    for field_name in ModuleReport.METRIC_FIELDS:
        vals = [r.metric(field_name) for r in rows if r.metric(field_name) is not None]
        means[field_name] = sum(vals) / len(vals) if vals else None
    overall = ModuleReport(
        name="Overall",
        avg_time_s=sum(r.avg_time_s for r in rows),
        **means,
    )
    return OverallReport(rows=list(rows), overall=overall)


def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{v:.6f}".rstrip("0").rstrip(".")


def render_report(report: OverallReport) -> str:
    """Aligned text table: module rows then the Overall row."""
    header = ("Module", "Accuracy", "Precision", "Recall", "F1-score", "Specificity", "Average Time (s)")
    lines = [header]
    for r in report.rows + [report.overall]:
        lines.append(
            (
                r.name,
                _fmt(r.accuracy),
                _fmt(r.precision),
                _fmt(r.recall),
                _fmt(r.f1),
                _fmt(r.specificity),
                f"{r.avg_time_s:.3f}",
            )
        )
    widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
    return "\n".join("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in lines)


def report_to_json(report: OverallReport) -> str:
    def row(r: ModuleReport) -> dict:
        return {
            "name": r.name,
            "accuracy": r.accuracy,
            "precision": r.precision,
            "recall": r.recall,
            "f1": r.f1,
            "specificity": r.specificity,
            "avg_time_s": r.avg_time_s,
        }

    return json.dumps(
        {"rows": [row(r) for r in report.rows], "overall": row(report.overall), **report.extras},
        indent=2,
    )


# ---------------------------------------------------------------------------
# Corpus benchmark
# ---------------------------------------------------------------------------

def _iou(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def load_manifest(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise ManifestMissing(f"{path} does not exist")
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


class StageTimer:
    def __init__(self):
        self.totals: dict[str, float] = {}
        self.samples: dict[str, int] = {}

    def add(self, stage: str, dt: float):
        self.totals[stage] = self.totals.get(stage, 0.0) + dt
        self.samples[stage] = self.samples.get(stage, 0) + 1

    def mean(self, stage: str) -> float:
        n = self.samples.get(stage, 0)
        return self.totals[stage] / n if n else 0.0


def run_benchmark(manifest_path: str | Path, detection_iou: float = 0.5) -> OverallReport:
    """Score every stage against the manifest's ground truth.

    Hit rules: vehicle detection IoU >= `detection_iou`; plate localization
    all four corners within 2 px; OCR exact string match (per-character
    counts are also accumulated); color exact name match. Each stage is
    timed; scenes flagged as adversarial fixtures are skipped.
    """
    from . import detect as det
    from . import plate as pl
    from .color import classify_vehicle_color
    from .imaging import Rect, crop, crop_gray, decode_ppm, to_grayscale

    records = load_manifest(manifest_path)
    records = [r for r in records if r.get("kind") != "adversarial"]
    if not records:
        raise CorpusEmpty("manifest has no scorable records")

    base = Path(manifest_path).parent
    counts = {k: ConfusionCounts() for k in ("detection", "plate", "ocr", "color")}
    timer = StageTimer()
    char_hits = char_total = 0

    backgrounds: dict[str, det.BackgroundModel] = {}
    for rec in records:
        frame = decode_ppm((base / rec["image"]).read_bytes())
        gray = to_grayscale(frame)
        bg_name = rec.get("background")

        # -- vehicle detection ------------------------------------------------
        if bg_name is not None:
            if bg_name not in backgrounds:
                bg_frame = decode_ppm((base / bg_name).read_bytes())
                backgrounds[bg_name] = det.BackgroundModel.from_frame(to_grayscale(bg_frame))
            model = backgrounds[bg_name]
            t0 = time.perf_counter()
            mask = det.motion_mask(model, gray, det.DEFAULT_DIFF_THRESHOLD)
            proposals = det.propose_vehicles(mask)
            timer.add("detection", time.perf_counter() - t0)
            gt_box = rec.get("vehicle_box")
            if gt_box is not None:
                hit = any(_iou(tuple(gt_box), (p.bbox.x, p.bbox.y, p.bbox.w, p.bbox.h)) >= detection_iou for p in proposals)
                if hit:
                    counts["detection"].tp += 1
                    counts["detection"].fp += max(0, len(proposals) - 1)
                else:
                    counts["detection"].fn += 1
                    counts["detection"].fp += len(proposals)
            elif proposals:
                counts["detection"].fp += len(proposals)
            else:
                counts["detection"].tn += 1

        # -- plate localization ------------------------------------------------
        gt_corners = rec.get("plate_corners")
        t0 = time.perf_counter()
        try:
            quad = pl.locate_plate(gray)
        except pl.NoPlateFound:
            quad = None
        timer.add("plate", time.perf_counter() - t0)
        if gt_corners is not None:
            if quad is not None and _corners_close(quad, gt_corners, tol=2.0):
                counts["plate"].tp += 1
            elif quad is not None:
                counts["plate"].fp += 1
            else:
                counts["plate"].fn += 1
        elif quad is not None:
            counts["plate"].fp += 1
        else:
            counts["plate"].tn += 1

        # -- OCR on the ground-truth quad (isolates the recognizer) -----------
        gt_text = rec.get("plate_text")
        if gt_text is not None and gt_corners is not None:
            gt_quad = pl.Quad(np.array(gt_corners, dtype=float))
            t0 = time.perf_counter()
            try:
                plate_img = pl.rectify(gray, gt_quad, pl.PLATE_W, pl.PLATE_H)
                boxes = pl.segment_chars(plate_img)
                text = "".join(pl.ocr_glyph(crop_gray(plate_img, box))[0] for box in boxes)
            except (pl.NoGlyphs, pl.DegenerateQuad):
                text = ""
            timer.add("ocr", time.perf_counter() - t0)
            if text == gt_text:
                counts["ocr"].tp += 1
            else:
                counts["ocr"].fn += 1
            for got, want in zip(text, gt_text):
                char_hits += int(got == want)
            char_total += len(gt_text)

        # -- color --------------------------------------------------------------
        gt_color = rec.get("color")
        gt_box = rec.get("vehicle_box")
        if gt_color is not None and gt_box is not None:
            vcrop = crop(frame, Rect(*gt_box))
            t0 = time.perf_counter()
            name, _ = classify_vehicle_color(vcrop)
            timer.add("color", time.perf_counter() - t0)
            if name.name == gt_color:
                counts["color"].tp += 1
            else:
                counts["color"].fn += 1

    labels = {
        "detection": "Vehicle Detection",
        "plate": "License Plate Detection",
        "ocr": "Optical Character Recognition",
        "color": "Colour Classification",
    }
    rows = []
    for key in ("detection", "plate", "ocr", "color"):
        if counts[key].total > 0:
            rows.append(
                metrics_from_counts(labels[key], counts[key], avg_time_s=timer.mean(key))
            )
    report = aggregate_overall(rows)
    if char_total:
        report.extras["per_char_accuracy"] = char_hits / char_total
    return report


def _corners_close(quad, gt_corners, tol: float) -> bool:
    got = quad.corners
    want = np.array(gt_corners, dtype=float)
    return bool(np.all(np.abs(got - want) <= tol))
