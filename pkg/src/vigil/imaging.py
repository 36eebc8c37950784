"""Raster types, binary PPM/PGM codec, and the pixel-level primitives every
downstream stage builds on: grayscale conversion, bilinear resize, crops,
horizontal flip, and global/adaptive thresholding.

Conventions fixed here so independent implementations agree:
  * grayscale uses ITU-R BT.601 weights (0.299, 0.587, 0.114), round half up
  * bilinear resize maps coordinates through half-pixel centers
  * random crops draw offsets from a SplitMix64 stream (see rng.py)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64


class ImagingError(Exception):
    pass


class BadMagic(ImagingError):
    pass


class TruncatedPayload(ImagingError):
    pass


class MaxvalNot255(ImagingError):
    pass


class ZeroDimension(ImagingError):
    pass


class RectOutOfBounds(ImagingError):
    pass


class BadWindow(ImagingError):
    pass


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle; (x, y) is the top-left corner."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"Rect needs positive extent, got {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    def contains(self, other: "Rect") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.x2 <= self.x2
            and other.y2 <= self.y2
        )


class Frame:
    """RGB raster: (height, width, 3) uint8, row-major."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels, dtype=np.uint8)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"Frame pixels must be (h, w, 3), got {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ZeroDimension("frame dimensions must be >= 1")
        self.pixels = pixels

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def rect(self) -> Rect:
        return Rect(0, 0, self.width, self.height)

    def copy(self) -> "Frame":
        return Frame(self.pixels.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and np.array_equal(self.pixels, other.pixels)

    def __repr__(self) -> str:
        return f"Frame({self.width}x{self.height})"

    @staticmethod
    def filled(width: int, height: int, rgb=(0, 0, 0)) -> "Frame":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:, :] = rgb
        return Frame(px)


class GrayFrame:
    """Single-channel raster: (height, width) uint8."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels, dtype=np.uint8)
        if pixels.ndim != 2:
            raise ValueError(f"GrayFrame pixels must be (h, w), got {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ZeroDimension("frame dimensions must be >= 1")
        self.pixels = pixels

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def rect(self) -> Rect:
        return Rect(0, 0, self.width, self.height)

    def copy(self) -> "GrayFrame":
        return GrayFrame(self.pixels.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayFrame) and np.array_equal(self.pixels, other.pixels)

    def __repr__(self) -> str:
        return f"GrayFrame({self.width}x{self.height})"


class BitMask:
    """Boolean raster: (height, width) bool."""

    __slots__ = ("bits",)

    def __init__(self, bits: np.ndarray):
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError(f"BitMask bits must be (h, w), got {bits.shape}")
        self.bits = bits

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, BitMask) and np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return f"BitMask({self.width}x{self.height}, {self.count()} set)"


# ---------------------------------------------------------------------------
# PPM / PGM codec
# ---------------------------------------------------------------------------

def _parse_header_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens after the magic,
    honoring '#' comments. Returns (tokens, offset past the single whitespace
    byte that terminates the last token)."""
    tokens: list[int] = []
    i = 2  # past the 2-byte magic
    n = len(data)
    while len(tokens) < count:
        # skip whitespace and comments
        while i < n:
            c = data[i]
            if c in b" \t\r\n\f\v":
                i += 1
            elif c == ord("#"):
                while i < n and data[i] not in b"\r\n":
                    i += 1
            else:
                break
        start = i
        while i < n and data[i] not in b" \t\r\n\f\v#":
            i += 1
        if start == i:
            raise TruncatedPayload("header ended before all tokens were read")
        try:
            tokens.append(int(data[start:i]))
        except ValueError:
            raise BadMagic(f"non-numeric header token {data[start:i]!r}")
    # exactly one whitespace byte separates the maxval from the payload
    if i >= n:
        raise TruncatedPayload("missing payload")
    i += 1
    return tokens, i


def decode_ppm(data: bytes) -> Frame:
    """Decode a binary PPM (P6) or PGM (P5, promoted to a gray RGB frame)."""
    if len(data) < 2:
        raise BadMagic("input shorter than a magic number")
    magic = data[:2]
    if magic not in (b"P6", b"P5"):
        raise BadMagic(f"unsupported magic {magic!r}")
    (w, h, maxval), offset = _parse_header_tokens(data, 3)
    if w < 1 or h < 1:
        raise ZeroDimension(f"bad dimensions {w}x{h}")
    if maxval != 255:
        raise MaxvalNot255(f"maxval {maxval} unsupported")
    channels = 3 if magic == b"P6" else 1
    need = w * h * channels
    payload = data[offset : offset + need]
    if len(payload) < need:
        raise TruncatedPayload(f"payload {len(payload)} bytes, need {need}")
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 3:
        return Frame(arr.reshape(h, w, 3).copy())
    gray = arr.reshape(h, w)
    return Frame(np.repeat(gray[:, :, None], 3, axis=2))


def decode_pgm(data: bytes) -> GrayFrame:
    """Decode a binary PGM (P5) without channel promotion."""
    if data[:2] != b"P5":
        raise BadMagic(f"expected P5, got {data[:2]!r}")
    (w, h, maxval), offset = _parse_header_tokens(data, 3)
    if maxval != 255:
        raise MaxvalNot255(f"maxval {maxval} unsupported")
    need = w * h
    payload = data[offset : offset + need]
    if len(payload) < need:
        raise TruncatedPayload(f"payload {len(payload)} bytes, need {need}")
    return GrayFrame(np.frombuffer(payload, dtype=np.uint8).reshape(h, w).copy())


def encode_ppm(frame: Frame) -> bytes:
    """Canonical binary PPM: header 'P6\\n<w> <h>\\n255\\n' + raw RGB bytes."""
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels.tobytes()


def encode_pgm(gray: GrayFrame) -> bytes:
    header = f"P5\n{gray.width} {gray.height}\n255\n".encode("ascii")
    return header + gray.pixels.tobytes()


# ---------------------------------------------------------------------------
# Color / geometry primitives
# ---------------------------------------------------------------------------

_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def to_grayscale(frame: Frame) -> GrayFrame:
    """BT.601 luma, rounded half up. Weights sum to 1, so gray inputs are
    fixed points of the conversion."""
    luma = frame.pixels.astype(np.float64) @ _LUMA_WEIGHTS
    return GrayFrame(np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8))


def gray_to_frame(gray: GrayFrame) -> Frame:
    return Frame(np.repeat(gray.pixels[:, :, None], 3, axis=2))


def _resize_bilinear_array(src: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    in_h, in_w = src.shape[:2]
    # half-pixel-center mapping: dst x -> (x + 0.5) * in/out - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = np.clip(xs, 0, in_w - 1)
    ys = np.clip(ys, 0, in_h - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = xs - x0
    fy = ys - y0

    arr = src.astype(np.float64)
    if arr.ndim == 2:
        fx_b, fy_b = fx[None, :], fy[:, None]
        top = arr[y0][:, x0] * (1 - fx_b) + arr[y0][:, x1] * fx_b
        bot = arr[y1][:, x0] * (1 - fx_b) + arr[y1][:, x1] * fx_b
        out = top * (1 - fy_b) + bot * fy_b
    else:
        fx_b, fy_b = fx[None, :, None], fy[:, None, None]
        top = arr[y0][:, x0] * (1 - fx_b) + arr[y0][:, x1] * fx_b
        bot = arr[y1][:, x0] * (1 - fx_b) + arr[y1][:, x1] * fx_b
        out = top * (1 - fy_b) + bot * fy_b
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def resize_bilinear(frame: Frame, out_w: int, out_h: int) -> Frame:
    if out_w < 1 or out_h < 1:
        raise ZeroDimension(f"cannot resize to {out_w}x{out_h}")
    if out_w == frame.width and out_h == frame.height:
        return frame.copy()
    return Frame(_resize_bilinear_array(frame.pixels, out_w, out_h))


def resize_bilinear_gray(gray: GrayFrame, out_w: int, out_h: int) -> GrayFrame:
    if out_w < 1 or out_h < 1:
        raise ZeroDimension(f"cannot resize to {out_w}x{out_h}")
    if out_w == gray.width and out_h == gray.height:
        return gray.copy()
    return GrayFrame(_resize_bilinear_array(gray.pixels, out_w, out_h))


def crop(frame: Frame, rect: Rect) -> Frame:
    if not frame.rect.contains(rect):
        raise RectOutOfBounds(f"{rect} outside {frame.width}x{frame.height}")
    return Frame(frame.pixels[rect.y : rect.y2, rect.x : rect.x2].copy())


def crop_gray(gray: GrayFrame, rect: Rect) -> GrayFrame:
    if not gray.rect.contains(rect):
        raise RectOutOfBounds(f"{rect} outside {gray.width}x{gray.height}")
    return GrayFrame(gray.pixels[rect.y : rect.y2, rect.x : rect.x2].copy())


def random_crop(frame: Frame, out_w: int, out_h: int, rng_seed: int) -> Frame:
    """Crop with offsets drawn uniformly from [0, w-out_w] x [0, h-out_h]
    using a SplitMix64 stream seeded with `rng_seed` (x offset first)."""
    if out_w > frame.width or out_h > frame.height:
        raise RectOutOfBounds(
            f"crop {out_w}x{out_h} larger than frame {frame.width}x{frame.height}"
        )
    rng = SplitMix64(rng_seed)
    ox = rng.below(frame.width - out_w + 1)
    oy = rng.below(frame.height - out_h + 1)
    return crop(frame, Rect(ox, oy, out_w, out_h))


def hflip(frame: Frame) -> Frame:
    """Mirror horizontally: column i maps to column width-1-i."""
    return Frame(frame.pixels[:, ::-1].copy())


def threshold_global(gray: GrayFrame, t: int) -> BitMask:
    """Set bits where pixel >= t."""
    return BitMask(gray.pixels >= t)


def threshold_adaptive(gray: GrayFrame, window: int, offset: float) -> BitMask:
    """Set bits where pixel >= (local mean over `window` - offset).

    The window is window x window, clipped at the borders (the mean is taken
    over the pixels actually inside the image). Negative offsets demand that
    a pixel exceed its neighborhood mean, which isolates locally-bright
    structure such as plates on dark bodywork.
    """
    if window < 3 or window % 2 == 0:
        raise BadWindow(f"window must be odd and >= 3, got {window}")
    h, w = gray.pixels.shape
    half = window // 2
    px = gray.pixels.astype(np.float64)

    # integral image with a zero row/col prepended; S[y2,x2]-S[y1,x2]-...
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    integral[1:, 1:] = px.cumsum(axis=0).cumsum(axis=1)

    ys = np.arange(h)
    xs = np.arange(w)
    y1 = np.maximum(ys - half, 0)
    y2 = np.minimum(ys + half + 1, h)
    x1 = np.maximum(xs - half, 0)
    x2 = np.minimum(xs + half + 1, w)

    sums = (
        integral[np.ix_(y2, x2)]
        - integral[np.ix_(y1, x2)]
        - integral[np.ix_(y2, x1)]
        + integral[np.ix_(y1, x1)]
    )
    counts = (y2 - y1)[:, None] * (x2 - x1)[None, :]
    means = sums / counts
    return BitMask(px >= means - offset)


def otsu_threshold(gray: GrayFrame) -> int:
    """Threshold maximizing between-class variance over the 256-bin histogram.
    Returns a value t such that `pixel >= t` selects the brighter class."""
    hist = np.bincount(gray.pixels.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    if total == 0:
        return 128
    omega = hist.cumsum() / total
    mu = (hist * np.arange(256)).cumsum() / total
    mu_t = mu[-1]
    denom = omega * (1 - omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = np.where(denom > 0, (mu_t * omega - mu) ** 2 / denom, 0.0)
    return int(np.argmax(sigma_b)) + 1
