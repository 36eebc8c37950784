"""Hand-built sanity model: a tiny conv stack whose weights are matched
filters for four glyph textures. No training happens anywhere in this
package; this model exists so the classifier path can be exercised and
demonstrated end to end with deterministic weights.
"""

from __future__ import annotations

import numpy as np

from ..imaging import Frame
from ..plate.templates import TEMPLATES, scale_nearest
from .arch import (
    FULLY_CONNECTED,
    GLOBAL_AVG_POOL,
    SOFTMAX,
    STANDARD_CONV,
    ArchitectureSpec,
    LayerSpec,
)
from .weights import WeightBundle

SANITY_CLASSES = ("E", "O", "X", "I")
SANITY_RESOLUTION = 64
_CELL_W, _CELL_H = 16, 24
_BG, _INK = 200, 40


def make_texture_frame(char: str, seed: int) -> Frame:
    """64x64 frame tiled with one glyph at a seeded phase, plus pixel noise."""
    rng = np.random.default_rng(seed)
    glyph = scale_nearest(TEMPLATES[char], _CELL_W, _CELL_H)
    tile = np.full((_CELL_H, _CELL_W), _BG, dtype=np.float64)
    tile[glyph] = _INK
    reps_y = SANITY_RESOLUTION // _CELL_H + 2
    reps_x = SANITY_RESOLUTION // _CELL_W + 2
    sheet = np.tile(tile, (reps_y, reps_x))
    oy = int(rng.integers(0, _CELL_H))
    ox = int(rng.integers(0, _CELL_W))
    window = sheet[oy : oy + SANITY_RESOLUTION, ox : ox + SANITY_RESOLUTION]
    noisy = window + rng.normal(0, 6, window.shape)
    gray = np.clip(noisy, 0, 255).astype(np.uint8)
    return Frame(np.repeat(gray[:, :, None], 3, axis=2))


def make_texture_dataset(per_class: int, seed: int = 0) -> list[tuple[Frame, int]]:
    samples = []
    for label, char in enumerate(SANITY_CLASSES):
        for i in range(per_class):
            samples.append((make_texture_frame(char, seed * 10_000 + label * 100 + i), label))
    return samples


def _noiseless_texture(char: str, oy: int, ox: int) -> np.ndarray:
    glyph = scale_nearest(TEMPLATES[char], _CELL_W, _CELL_H)
    tile = np.full((_CELL_H, _CELL_W), _BG, dtype=np.float64)
    tile[glyph] = _INK
    reps_y = SANITY_RESOLUTION // _CELL_H + 2
    reps_x = SANITY_RESOLUTION // _CELL_W + 2
    sheet = np.tile(tile, (reps_y, reps_x))
    window = sheet[oy : oy + SANITY_RESOLUTION, ox : ox + SANITY_RESOLUTION]
    return np.repeat(window[:, :, None], 3, axis=2) / 255.0


def make_sanity_model() -> tuple[ArchitectureSpec, WeightBundle]:
    """Conv(24x16, stride 2, 3->4) with zero-mean matched filters per class,
    global average pooling over the rectified responses, and a head that
    inverts the phase-averaged response matrix of the noiseless textures.

    Everything is closed form: filters are the glyphs themselves and the
    head is a pseudo-inverse, so the model is reproducible byte for byte.
    """
    from .forward import depthwise_forward  # noqa: F401  (import cycle guard)
    from .forward import global_avg_pool, relu, standard_conv_forward

    spec = ArchitectureSpec(
        layers=(
            LayerSpec(STANDARD_CONV, stride=2, kernel=(_CELL_H, _CELL_W), in_channels=3, out_channels=4),
            LayerSpec(GLOBAL_AVG_POOL, in_channels=4, out_channels=4),
            LayerSpec(FULLY_CONNECTED, in_channels=4, out_channels=4),
            LayerSpec(SOFTMAX, in_channels=4, out_channels=4),
        ),
        width_multiplier=1.0,
        input_resolution=SANITY_RESOLUTION,
        num_classes=4,
    )
    kernel = np.zeros((_CELL_H, _CELL_W, 3, 4), dtype=np.float32)
    for c, char in enumerate(SANITY_CLASSES):
        glyph = scale_nearest(TEMPLATES[char], _CELL_W, _CELL_H)
        filt = np.where(glyph, -1.0, 1.0)  # ink is darker than background
        filt -= filt.mean()  # flat regions contribute nothing
        filt /= np.linalg.norm(filt)
        kernel[:, :, :, c] = filt[:, :, None] / 3.0

    # expected pooled response per (texture class, filter), phases subsampled
    responses = np.zeros((4, 4), dtype=np.float64)
    phases = [(oy, ox) for oy in range(0, _CELL_H, 6) for ox in range(0, _CELL_W, 4)]
    for d, char in enumerate(SANITY_CLASSES):
        for oy, ox in phases:
            x = _noiseless_texture(char, oy, ox)
            pooled = global_avg_pool(relu(standard_conv_forward(x, kernel.astype(np.float64), 2)))
            responses[d] += pooled
    responses /= len(phases)
    head = np.linalg.pinv(responses)  # pooled responses -> ~one-hot scores

    bundle = WeightBundle(
        arrays=[
            (kernel, np.zeros(4, dtype=np.float32)),
            (),
            ((head * 40.0).astype(np.float32), np.zeros(4, dtype=np.float32)),
            (),
        ],
        fingerprint=spec.fingerprint(),
        labels=[f"glyphcar {c}" for c in SANITY_CLASSES],
    )
    return spec, bundle
