"""Built-in glyph templates for the template-matching recognizer.

Each of the 36 characters (0-9, A-Z) is defined on a 5x7 dot matrix, cropped
to its ink bounding box, and scaled (nearest neighbor) onto a 16x24 canvas.
OCR crops are tight component bboxes, so templates are bbox-normalized the
same way; comparing stretched-to-canvas bitmaps makes the match scale-free.

Glyphs are deliberately drawn so look-alike pairs stay distinct: 0 carries a
slash, 1 a flag and base, I top and bottom serifs.
"""

from __future__ import annotations

import numpy as np

GLYPH_W = 16
GLYPH_H = 24

_FONT_5X7 = {
    "0": ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    "1": ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    "2": ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    "3": ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    "4": ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    "5": ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    "6": ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    "7": ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    "8": ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    "9": ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
    "A": ("01110", "10001", "10001", "11111", "10001", "10001", "10001"),
    "B": ("11110", "10001", "10001", "11110", "10001", "10001", "11110"),
    "C": ("01110", "10001", "10000", "10000", "10000", "10001", "01110"),
    "D": ("11100", "10010", "10001", "10001", "10001", "10010", "11100"),
    "E": ("11111", "10000", "10000", "11110", "10000", "10000", "11111"),
    "F": ("11111", "10000", "10000", "11110", "10000", "10000", "10000"),
    "G": ("01110", "10001", "10000", "10111", "10001", "10001", "01111"),
    "H": ("10001", "10001", "10001", "11111", "10001", "10001", "10001"),
    "I": ("01110", "00100", "00100", "00100", "00100", "00100", "01110"),
    "J": ("00111", "00010", "00010", "00010", "00010", "10010", "01100"),
    "K": ("10001", "10010", "10100", "11000", "10100", "10010", "10001"),
    "L": ("10000", "10000", "10000", "10000", "10000", "10000", "11111"),
    "M": ("10001", "11011", "10101", "10101", "10001", "10001", "10001"),
    "N": ("10001", "10001", "11001", "10101", "10011", "10001", "10001"),
    "O": ("01110", "10001", "10001", "10001", "10001", "10001", "01110"),
    "P": ("11110", "10001", "10001", "11110", "10000", "10000", "10000"),
    "Q": ("01110", "10001", "10001", "10001", "10101", "10010", "01101"),
    "R": ("11110", "10001", "10001", "11110", "10100", "10010", "10001"),
    "S": ("01111", "10000", "10000", "01110", "00001", "00001", "11110"),
    "T": ("11111", "00100", "00100", "00100", "00100", "00100", "00100"),
    "U": ("10001", "10001", "10001", "10001", "10001", "10001", "01110"),
    "V": ("10001", "10001", "10001", "10001", "10001", "01010", "00100"),
    "W": ("10001", "10001", "10001", "10101", "10101", "10101", "01010"),
    "X": ("10001", "10001", "01010", "00100", "01010", "10001", "10001"),
    "Y": ("10001", "10001", "10001", "01010", "00100", "00100", "00100"),
    "Z": ("11111", "00001", "00010", "00100", "01000", "10000", "11111"),
}

CHARSET = "".join(sorted(_FONT_5X7))  # 0-9 then A-Z


def _ink_bbox(grid: np.ndarray) -> np.ndarray:
    rows = np.flatnonzero(grid.any(axis=1))
    cols = np.flatnonzero(grid.any(axis=0))
    return grid[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]


def scale_nearest(grid: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Nearest-neighbor scale of a boolean grid to (out_h, out_w).

    Samples at cell centers so both edges of the source survive
    downscaling (a floor-based map drops the last row/column)."""
    h, w = grid.shape
    ys = ((np.arange(out_h) + 0.5) * h / out_h).astype(np.intp)
    xs = ((np.arange(out_w) + 0.5) * w / out_w).astype(np.intp)
    return grid[np.ix_(np.minimum(ys, h - 1), np.minimum(xs, w - 1))]


def glyph_template(char: str) -> np.ndarray:
    """(GLYPH_H, GLYPH_W) bool bitmap, ink bbox stretched to the canvas."""
    grid = np.array([[c == "1" for c in row] for row in _FONT_5X7[char]], dtype=bool)
    return scale_nearest(_ink_bbox(grid), GLYPH_W, GLYPH_H)


TEMPLATES: dict[str, np.ndarray] = {c: glyph_template(c) for c in CHARSET}


def render_glyph(char: str, width: int, height: int) -> np.ndarray:
    """Boolean ink mask for drawing `char` at an arbitrary cell size."""
    return scale_nearest(TEMPLATES[char], width, height)
