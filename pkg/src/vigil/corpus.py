"""Synthetic scene generator with ground-truth manifests.

Scenes are 640x480 road shots: a fixed background (backdrop, road, lane
dashes) plus one vehicle with a framed, glyph-stamped plate. The generator
records everything a benchmark needs — vehicle box, color name, plate text,
plate type, and the plate's inner-corner pixels — as one JSON object per
line. Scene kinds:

  clean     axis-aligned plate, no noise
  noisy     same plus Gaussian pixel noise and brightness jitter
  occluded  plate covered by a body-colored bar (vehicle still visible)

`render_adversarial_scene` builds the fixture where ten larger bright
squares outrank the plate, so a top-10 contour scan must give up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imaging import Frame, encode_ppm
from .plate.geometry import Quad, perspective_map
from .plate.templates import TEMPLATES, scale_nearest
from .rng import SplitMix64

SCENE_W = 640
SCENE_H = 480

BACKDROP_RGB = (96, 104, 112)
ROAD_RGB = (63, 63, 63)
DASH_RGB = (190, 190, 190)
FRAME_RGB = (12, 12, 12)  # plate frame
INK_RGB = (15, 15, 15)

# body paint options: (palette name, rgb, luma-dark-enough-for-green-plates).
# Every luma sits at least 30 away from the road's, so motion differencing
# sees the whole body at the default threshold.
BODY_COLORS = [
    ("black", (18, 18, 18), True),
    ("maroon", (95, 0, 25), True),
    ("blue", (15, 15, 175), True),
    ("red", (245, 40, 35), False),
    ("green", (25, 150, 40), False),
    ("brown", (160, 95, 30), False),
    ("gray", (125, 125, 125), False),
]

PLATE_STYLES = [
    ("private", (235, 235, 235)),
    ("commercial", (225, 190, 20)),
    ("electric", (20, 150, 70)),  # only on dark bodies: needs luma contrast
]

_LETTERS = "ABCDEFGHJKLMNPRSTUVWXYZ"  # skip I/O/Q: rarely issued on plates
_DIGITS = "0123456789"


@dataclass
class SceneTruth:
    image: str
    kind: str
    background: str
    vehicle_box: tuple[int, int, int, int]
    color: str
    plate_text: str | None
    plate_type: str | None
    plate_corners: list[list[int]] | None

    def to_json(self) -> dict:
        return {
            "image": self.image,
            "kind": self.kind,
            "background": self.background,
            "vehicle_box": list(self.vehicle_box),
            "color": self.color,
            "plate_text": self.plate_text,
            "plate_type": self.plate_type,
            "plate_corners": self.plate_corners,
        }


def build_background() -> Frame:
    """Fixed scene backdrop shared by every frame of a corpus."""
    px = np.empty((SCENE_H, SCENE_W, 3), dtype=np.uint8)
    px[:160] = BACKDROP_RGB
    px[160:] = ROAD_RGB
    for x0, y0 in _dash_positions():
        px[y0 : y0 + 4, x0 : x0 + 24] = DASH_RGB
    return Frame(px)


def _dash_positions() -> list[tuple[int, int]]:
    # two dashed lane lines; dashes small enough to duck the plate area gate
    return [(210, 190 + i * 72) for i in range(4)] + [(420, 226 + i * 72) for i in range(4)]


def random_plate_text(rng: SplitMix64) -> str:
    return (
        rng.choice(_LETTERS)
        + rng.choice(_LETTERS)
        + rng.choice(_DIGITS)
        + rng.choice(_DIGITS)
        + rng.choice(_LETTERS)
        + rng.choice(_LETTERS)
        + rng.choice(_DIGITS)
        + rng.choice(_DIGITS)
        + rng.choice(_DIGITS)
        + rng.choice(_DIGITS)
    )


def stamp_plate(
    px: np.ndarray, x: int, y: int, w: int, h: int, bg_rgb, text: str
) -> list[list[int]]:
    """Draw a framed plate with glyph ink; returns the inner-corner pixels
    (TL, TR, BR, BL) of the bright region."""
    frame_px = 2
    px[y : y + h, x : x + w] = FRAME_RGB
    ix, iy = x + frame_px, y + frame_px
    iw, ih = w - 2 * frame_px, h - 2 * frame_px
    px[iy : iy + ih, ix : ix + iw] = bg_rgb

    pad_y = max(2, ih // 8)
    gh = ih - 2 * pad_y
    gap = 2
    n = len(text)
    gw = min(round(gh * 2 / 3), (iw - 6 - (n - 1) * gap) // n)
    total = n * gw + (n - 1) * gap
    gx = ix + (iw - total) // 2
    gy = iy + pad_y
    for ch in text:
        glyph = scale_nearest(TEMPLATES[ch], gw, gh)
        cell = px[gy : gy + gh, gx : gx + gw]
        cell[glyph] = INK_RGB
        gx += gw + gap
    return [[ix, iy], [ix + iw - 1, iy], [ix + iw - 1, iy + ih - 1], [ix, iy + ih - 1]]


def render_scene(rng: SplitMix64, kind: str = "clean") -> tuple[Frame, dict]:
    """One vehicle scene over the shared background; returns ground truth."""
    frame = build_background()
    px = frame.pixels

    body_choices = BODY_COLORS
    plate_type, plate_rgb = PLATE_STYLES[rng.below(len(PLATE_STYLES))]
    if plate_type == "electric":
        body_choices = [b for b in BODY_COLORS if b[2]]
    color_name, body_rgb, _ = body_choices[rng.below(len(body_choices))]

    bw = 190 + rng.below(50)  # body aspect stays < 2 so its ring never
    bh = round(bw / (1.5 + rng.next_float() * 0.3))  # passes the plate gate
    bx = 30 + rng.below(SCENE_W - bw - 60)
    by = 200 + rng.below(SCENE_H - bh - 210)
    px[by : by + bh, bx : bx + bw] = body_rgb

    # windshield: darker band across the upper body
    wx, wy = bx + bw // 6, by + bh // 8
    ww, wh = bw - bw // 3, bh // 4
    px[wy : wy + wh, wx : wx + ww] = tuple(int(c * 0.5) for c in body_rgb)

    ph = 30 + rng.below(5)
    pw = round(ph * (4.2 + rng.next_float() * 0.6))
    pat_x = bx + (bw - pw) // 2
    pat_y = by + bh - ph - 8
    text = random_plate_text(rng)
    corners = stamp_plate(px, pat_x, pat_y, pw, ph, plate_rgb, text)

    truth = {
        "kind": kind,
        "vehicle_box": [bx, by, bw, bh],
        "color": color_name,
        "plate_text": text,
        "plate_type": plate_type,
        "plate_corners": corners,
    }

    if kind == "occluded":
        ox = pat_x - 4
        px[pat_y - 4 : pat_y + ph + 4, ox : ox + pw + 8] = body_rgb
        truth["plate_text"] = None
        truth["plate_type"] = None
        truth["plate_corners"] = None
    elif kind == "noisy":
        noise_rng = np.random.default_rng(rng.next_u64())
        noisy = px.astype(np.int16) + noise_rng.normal(0, 5, px.shape).round().astype(np.int16)
        noisy += int(noise_rng.integers(-8, 9))
        frame = Frame(np.clip(noisy, 0, 255).astype(np.uint8))

    return frame, truth


def render_adversarial_scene(rng: SplitMix64) -> tuple[Frame, dict]:
    """Ten bright squares, each a bigger contour than the plate, so the plate
    ranks 11th by area. Every square fails the aspect gate."""
    frame = build_background()
    px = frame.pixels
    for i in range(5):
        for j in range(2):
            x0 = 15 + i * 125
            y0 = 12 + j * 74
            px[y0 : y0 + 60, x0 : x0 + 60] = (232, 232, 232)

    body_rgb = (15, 15, 175)
    bx, by, bw, bh = 240, 300, 200, 120
    px[by : by + bh, bx : bx + bw] = body_rgb
    text = random_plate_text(rng)
    ph, pw = 24, 108
    corners = stamp_plate(px, bx + (bw - pw) // 2, by + bh - ph - 8, pw, ph, (235, 235, 235), text)
    truth = {
        "kind": "adversarial",
        "vehicle_box": [bx, by, bw, bh],
        "color": "blue",
        "plate_text": text,
        "plate_type": "private",
        "plate_corners": corners,
    }
    return frame, truth


def render_plate_canvas(text: str, bg_rgb=(235, 235, 235), w: int = 240, h: int = 60) -> Frame:
    """Rectified-size plate rendering (no frame), for warp/rectify fixtures."""
    px = np.empty((h, w, 3), dtype=np.uint8)
    px[:, :] = bg_rgb
    pad_y = h // 8
    gh = h - 2 * pad_y
    gap = 3
    n = len(text)
    gw = min(round(gh * 2 / 3), (w - 10 - (n - 1) * gap) // n)
    gx = (w - (n * gw + (n - 1) * gap)) // 2
    for ch in text:
        glyph = scale_nearest(TEMPLATES[ch], gw, gh)
        cell = px[pad_y : pad_y + gh, gx : gx + gw]
        cell[glyph] = INK_RGB
        gx += gw + gap
    return Frame(px)


def warp_canvas_into(canvas: Frame, quad: Quad, target: Frame):
    """Paint `canvas` onto `target` under the quad's perspective (in place)."""
    H = perspective_map(quad, canvas.width, canvas.height)
    Hinv = np.linalg.inv(H)
    xs = quad.corners[:, 0]
    ys = quad.corners[:, 1]
    x0, x1 = int(np.floor(xs.min())), int(np.ceil(xs.max())) + 1
    y0, y1 = int(np.floor(ys.min())), int(np.ceil(ys.max())) + 1
    gx, gy = np.meshgrid(np.arange(x0, x1, dtype=np.float64), np.arange(y0, y1, dtype=np.float64))
    denom = Hinv[2, 0] * gx + Hinv[2, 1] * gy + Hinv[2, 2]
    u = (Hinv[0, 0] * gx + Hinv[0, 1] * gy + Hinv[0, 2]) / denom
    v = (Hinv[1, 0] * gx + Hinv[1, 1] * gy + Hinv[1, 2]) / denom
    inside = (u >= 0) & (u <= canvas.width - 1) & (v >= 0) & (v <= canvas.height - 1)
    ui = np.clip(u, 0, canvas.width - 1)
    vi = np.clip(v, 0, canvas.height - 1)
    u0 = np.floor(ui).astype(np.intp)
    v0 = np.floor(vi).astype(np.intp)
    u1 = np.minimum(u0 + 1, canvas.width - 1)
    v1 = np.minimum(v0 + 1, canvas.height - 1)
    fu = (ui - u0)[..., None]
    fv = (vi - v0)[..., None]
    src = canvas.pixels.astype(np.float64)
    top = src[v0, u0] * (1 - fu) + src[v0, u1] * fu
    bot = src[v1, u0] * (1 - fu) + src[v1, u1] * fu
    vals = np.clip(np.floor(top * (1 - fv) + bot * fv + 0.5), 0, 255).astype(np.uint8)
    region = target.pixels[y0:y1, x0:x1]
    region[inside] = vals[inside]


def generate_corpus(
    out_dir: str | Path,
    scenes: int = 200,
    seed: int = 1,
    noisy_fraction: float = 0.15,
    occluded_fraction: float = 0.05,
    include_adversarial: bool = True,
) -> Path:
    """Write background, scene PPMs, and manifest.jsonl; returns the manifest
    path. Scene NNN's RNG stream is split from the corpus seed, so any prefix
    of the corpus is stable as `scenes` grows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = SplitMix64(seed)
    bg = build_background()
    bg_name = "background.ppm"
    (out / bg_name).write_bytes(encode_ppm(bg))

    n_occluded = round(scenes * occluded_fraction)
    n_noisy = round(scenes * noisy_fraction)
    kinds = ["occluded"] * n_occluded + ["noisy"] * n_noisy
    kinds += ["clean"] * (scenes - len(kinds))

    manifest = out / "manifest.jsonl"
    with open(manifest, "w", encoding="utf-8") as mf:
        for i in range(scenes):
            frame, truth = render_scene(root.split(), kinds[i])
            name = f"scene_{i:04d}.ppm"
            (out / name).write_bytes(encode_ppm(frame))
            record = SceneTruth(
                image=name, background=bg_name, **truth
            )
            mf.write(json.dumps(record.to_json()) + "\n")
        if include_adversarial:
            frame, truth = render_adversarial_scene(root.split())
            name = "scene_adversarial.ppm"
            (out / name).write_bytes(encode_ppm(frame))
            mf.write(json.dumps(SceneTruth(image=name, background=bg_name, **truth).to_json()) + "\n")
    return manifest
