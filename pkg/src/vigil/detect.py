"""Motion-based vehicle region proposal.

A running-average background model plus frame differencing stands in for a
neural detector; anything fancier can attach through the detector plug
registry without touching the rest of the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
from scipy import ndimage

from .imaging import BitMask, Frame, GrayFrame, Rect, to_grayscale


class GeometryMismatch(Exception):
    pass


DEFAULT_ALPHA = 0.05
DEFAULT_DIFF_THRESHOLD = 25
DEFAULT_MIN_AREA = 400
DEFAULT_ASPECT = (0.5, 4.0)
DEFAULT_DILATE_MARGIN = 4

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass
class BackgroundModel:
    """Per-pixel running-average luma. alpha is the learning rate in (0, 1]."""

    mean: np.ndarray  # (h, w) float64
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        self.mean = np.asarray(self.mean, dtype=np.float64)

    @property
    def width(self) -> int:
        return self.mean.shape[1]

    @property
    def height(self) -> int:
        return self.mean.shape[0]

    @staticmethod
    def from_frame(gray: GrayFrame, alpha: float = DEFAULT_ALPHA) -> "BackgroundModel":
        return BackgroundModel(gray.pixels.astype(np.float64), alpha)

    @staticmethod
    def zeros(width: int, height: int, alpha: float = DEFAULT_ALPHA) -> "BackgroundModel":
        return BackgroundModel(np.zeros((height, width)), alpha)


@dataclass(frozen=True)
class Region:
    """One vehicle candidate: tight (or dilated) bbox plus its foreground mass."""

    bbox: Rect
    area: int
    kind: str = "vehicle-candidate"


def _check_geometry(model: BackgroundModel, gray: GrayFrame):
    if (model.height, model.width) != (gray.height, gray.width):
        raise GeometryMismatch(
            f"model {model.width}x{model.height} vs frame {gray.width}x{gray.height}"
        )


def update_background(model: BackgroundModel, gray: GrayFrame) -> BackgroundModel:
    """mean' = (1 - alpha) * mean + alpha * pixel, per pixel."""
    _check_geometry(model, gray)
    new_mean = (1.0 - model.alpha) * model.mean + model.alpha * gray.pixels
    return BackgroundModel(new_mean, model.alpha)


def motion_mask(model: BackgroundModel, gray: GrayFrame, diff_threshold: float) -> BitMask:
    """Bits set where |pixel - background mean| >= diff_threshold."""
    _check_geometry(model, gray)
    return BitMask(np.abs(gray.pixels.astype(np.float64) - model.mean) >= diff_threshold)


def connected_components(mask: BitMask) -> list[Region]:
    """8-connected components with tight bboxes and exact pixel counts,
    ordered by descending area, ties by (y, x) of the bbox."""
    labels, n = ndimage.label(mask.bits, structure=_EIGHT_CONNECTED)
    if n == 0:
        return []
    regions = []
    slices = ndimage.find_objects(labels)
    counts = np.bincount(labels.ravel())
    for i, sl in enumerate(slices, start=1):
        ys, xs = sl
        bbox = Rect(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start)
        regions.append(Region(bbox=bbox, area=int(counts[i])))
    regions.sort(key=lambda r: (-r.area, r.bbox.y, r.bbox.x))
    return regions


def propose_vehicles(
    mask: BitMask,
    min_area: int = DEFAULT_MIN_AREA,
    aspect: tuple[float, float] = DEFAULT_ASPECT,
    margin: int = DEFAULT_DILATE_MARGIN,
) -> list[Region]:
    """Components filtered by area and bbox aspect ratio (w/h); surviving
    bboxes are dilated by `margin` and clamped to the frame."""
    lo, hi = aspect
    if not lo < hi:
        raise ValueError(f"aspect bounds must satisfy lo < hi, got {aspect}")
    out = []
    for region in connected_components(mask):
        if region.area < min_area:
            continue
        ratio = region.bbox.w / region.bbox.h
        if not (lo <= ratio <= hi):
            continue
        x1 = max(region.bbox.x - margin, 0)
        y1 = max(region.bbox.y - margin, 0)
        x2 = min(region.bbox.x2 + margin, mask.width)
        y2 = min(region.bbox.y2 + margin, mask.height)
        out.append(Region(bbox=Rect(x1, y1, x2 - x1, y2 - y1), area=region.area))
    return out


# ---------------------------------------------------------------------------
# Detector plug boundary
# ---------------------------------------------------------------------------

class Detector(Protocol):
    def detect(self, frame: Frame) -> list[Region]: ...


@dataclass
class MotionDetector:
    """Built-in detector: background subtraction over the luma channel.

    Stateful and single-writer: one stream owns one instance. The background
    is seeded from the first frame it sees and updated after each detection.
    """

    alpha: float = DEFAULT_ALPHA
    diff_threshold: float = DEFAULT_DIFF_THRESHOLD
    min_area: int = DEFAULT_MIN_AREA
    aspect: tuple[float, float] = DEFAULT_ASPECT
    margin: int = DEFAULT_DILATE_MARGIN
    model: BackgroundModel | None = field(default=None, repr=False)

    def detect(self, frame: Frame) -> list[Region]:
        gray = to_grayscale(frame)
        if self.model is None:
            self.model = BackgroundModel.from_frame(gray, self.alpha)
            return []
        mask = motion_mask(self.model, gray, self.diff_threshold)
        regions = propose_vehicles(mask, self.min_area, self.aspect, self.margin)
        self.model = update_background(self.model, gray)
        return regions


_EXTERNAL_DETECTORS: dict[str, Callable[[], Detector]] = {}


def register_detector(identifier: str, factory: Callable[[], Detector]):
    _EXTERNAL_DETECTORS[identifier] = factory


def make_detector(key: str, **motion_kwargs) -> Detector:
    """Resolve a config key: "motion" or "external:<id>"."""
    if key == "motion":
        return MotionDetector(**motion_kwargs)
    if key.startswith("external:"):
        ident = key.split(":", 1)[1]
        if ident not in _EXTERNAL_DETECTORS:
            raise KeyError(f"no external detector registered as {ident!r}")
        return _EXTERNAL_DETECTORS[ident]()
    raise ValueError(f"unknown detector key {key!r}")
