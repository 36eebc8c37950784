"""Plate reading: localize by contour geometry, rectify, segment, and run
the built-in template recognizer.

Localization binarizes adaptively, sorts contours big to small, and inspects
only the first ten, accepting the first whose simplified polygon is a convex
four-sided figure with a plate-like aspect ratio. An external OCR engine can
replace the template matcher through the engine registry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..color import kmeans, name_color, sort_by_dominance
from ..imaging import (
    BitMask,
    Frame,
    GrayFrame,
    Rect,
    crop_gray,
    otsu_threshold,
    resize_bilinear_gray,
    threshold_adaptive,
    to_grayscale,
)
from .geometry import Contour, Quad, approx_polygon, find_contours, rectify, rectify_rgb
from .templates import GLYPH_H, GLYPH_W, TEMPLATES

PLATE_W = 240
PLATE_H = 60

# plate background color -> registration category
PLATE_TYPE_BY_COLOR = {"white": "private", "silver": "private", "yellow": "commercial", "green": "electric"}


class NoPlateFound(Exception):
    pass


class NoGlyphs(Exception):
    pass


@dataclass
class LocateConfig:
    window: int = 41  # adaptive threshold window; larger than plate half-height
    offset: float = -12.0  # negative: demand pixels beat their local mean
    top_n: int = 10  # contours inspected, big to small
    min_area: int = 120
    aspect: tuple[float, float] = (2.0, 6.0)
    epsilon_frac: float = 0.02  # polygon tolerance as a fraction of perimeter


@dataclass
class LocateDebug:
    """Filled in when passed to locate_plate; also drives --debug-dir dumps."""

    mask: BitMask | None = None
    contours_total: int = 0
    inspected: int = 0
    candidates: list[np.ndarray] = field(default_factory=list)


@dataclass
class PlateReadout:
    quad: Quad
    text: str
    per_char_scores: list[float]
    plate_type: str
    confidence: float

    def __post_init__(self):
        if len(self.text) != len(self.per_char_scores):
            raise ValueError("one score per character")


def _horizontal_quad(quad: Quad) -> bool:
    """Top edge mostly horizontal, left edge mostly vertical: rules out
    rotated slivers whose corner labels would lie about the aspect ratio."""
    tl, tr, br, bl = quad.corners
    top_ok = abs(tr[0] - tl[0]) > abs(tr[1] - tl[1])
    left_ok = abs(bl[1] - tl[1]) > abs(bl[0] - tl[0])
    return top_ok and left_ok


def locate_plate(
    gray: GrayFrame, cfg: LocateConfig | None = None, debug: LocateDebug | None = None
) -> Quad:
    """First plate-like quad among the ten largest bright contours."""
    cfg = cfg or LocateConfig()
    mask = threshold_adaptive(gray, cfg.window, cfg.offset)
    contours = find_contours(mask)
    if debug is not None:
        debug.mask = mask
        debug.contours_total = len(contours)
    for contour in contours[: cfg.top_n]:
        if debug is not None:
            debug.inspected += 1
        if contour.area < cfg.min_area:
            continue
        epsilon = max(1.0, cfg.epsilon_frac * contour.perimeter())
        poly = approx_polygon(contour, epsilon)
        if debug is not None:
            debug.candidates.append(poly)
        if len(poly) != 4:
            continue
        quad = Quad.from_points(poly.astype(np.float64))
        if not quad.is_convex():
            continue
        if not _horizontal_quad(quad):
            continue  # corner labels (and therefore aspect) need a level quad
        if not (cfg.aspect[0] <= quad.aspect() <= cfg.aspect[1]):
            continue
        return quad
    raise NoPlateFound(f"no four-sided candidate in the top {cfg.top_n} contours")


def _ink_mask(gray: GrayFrame) -> np.ndarray:
    """Binarize so that foreground is the minority class (the ink)."""
    t = otsu_threshold(gray)
    bright = gray.pixels >= t
    return ~bright if bright.mean() >= 0.5 else bright


def segment_chars(plate: GrayFrame) -> list[Rect]:
    """Character boxes on a rectified plate, ordered left to right.

    Components are kept when their height is 40-90% of the plate height and
    their width 2-25% of the plate width.
    """
    from ..detect import connected_components  # local import: avoid cycle at module load

    ink = _ink_mask(plate)
    h, w = plate.height, plate.width
    boxes = []
    for region in connected_components(BitMask(ink)):
        bh, bw = region.bbox.h, region.bbox.w
        if not (0.40 * h <= bh <= 0.90 * h):
            continue
        if not (0.02 * w <= bw <= 0.25 * w):
            continue
        boxes.append(region.bbox)
    if not boxes:
        raise NoGlyphs("no character-sized components on the plate")
    boxes.sort(key=lambda r: r.x)
    return boxes


def ocr_glyph(glyph: GrayFrame, templates: dict[str, np.ndarray] = TEMPLATES) -> tuple[str, float]:
    """Best-scoring template for one glyph crop.

    The crop is resized to the template canvas and binarized with dark-ink
    polarity; the score is 1 - Hamming/total. Ties go to the smaller char.
    """
    resized = resize_bilinear_gray(glyph, GLYPH_W, GLYPH_H)
    t = otsu_threshold(resized)
    ink = resized.pixels < t
    total = GLYPH_W * GLYPH_H
    best_char, best_score = "", -1.0
    for char in sorted(templates):
        score = 1.0 - float(np.count_nonzero(ink != templates[char])) / total
        if score > best_score:
            best_char, best_score = char, score
    return best_char, best_score


OcrEngine = Callable[[GrayFrame], tuple[str, float]]
_EXTERNAL_OCR: dict[str, OcrEngine] = {}


def register_ocr(identifier: str, engine: OcrEngine):
    _EXTERNAL_OCR[identifier] = engine


def make_ocr(key: str) -> OcrEngine:
    """Resolve a config key: "template" or "external:<id>"."""
    if key == "template":
        return ocr_glyph
    if key.startswith("external:"):
        ident = key.split(":", 1)[1]
        if ident not in _EXTERNAL_OCR:
            raise KeyError(f"no external OCR engine registered as {ident!r}")
        return _EXTERNAL_OCR[ident]
    raise ValueError(f"unknown ocr key {key!r}")


def plate_background_type(frame: Frame, quad: Quad, seed: int = 0) -> str:
    """Classify the plate category from the rectified plate's dominant color."""
    rect = rectify_rgb(frame, quad, PLATE_W // 2, PLATE_H // 2)
    pts = rect.pixels.reshape(-1, 3).astype(np.float64)
    model = sort_by_dominance(kmeans(pts, k=2, seed=seed))
    name = name_color(model.centroids[0]).name
    return PLATE_TYPE_BY_COLOR.get(name, "unknown")


def read_plate(
    frame: Frame,
    cfg: LocateConfig | None = None,
    ocr: OcrEngine = ocr_glyph,
    debug: LocateDebug | None = None,
) -> PlateReadout:
    """locate -> rectify -> segment -> per-glyph OCR -> assemble."""
    gray = to_grayscale(frame)
    quad = locate_plate(gray, cfg, debug)
    plate = rectify(gray, quad, PLATE_W, PLATE_H)
    boxes = segment_chars(plate)
    chars = []
    scores = []
    for box in boxes:
        char, score = ocr(crop_gray(plate, box))
        chars.append(char)
        scores.append(score)
    return PlateReadout(
        quad=quad,
        text="".join(chars),
        per_char_scores=scores,
        plate_type=plate_background_type(frame, quad),
        confidence=min(scores),
    )
