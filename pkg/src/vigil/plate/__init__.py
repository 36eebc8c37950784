"""Plate localization, rectification, character segmentation, and template
OCR."""

from .geometry import (
    Contour,
    DegenerateQuad,
    Quad,
    approx_polygon,
    find_contours,
    perspective_map,
    rectify,
    rectify_rgb,
)
from .reader import (
    PLATE_H,
    PLATE_W,
    LocateConfig,
    LocateDebug,
    NoGlyphs,
    NoPlateFound,
    PlateReadout,
    locate_plate,
    make_ocr,
    ocr_glyph,
    plate_background_type,
    read_plate,
    register_ocr,
    segment_chars,
)
from .templates import CHARSET, GLYPH_H, GLYPH_W, TEMPLATES, glyph_template

__all__ = [
    "CHARSET",
    "Contour",
    "DegenerateQuad",
    "GLYPH_H",
    "GLYPH_W",
    "LocateConfig",
    "LocateDebug",
    "NoGlyphs",
    "NoPlateFound",
    "PLATE_H",
    "PLATE_W",
    "PlateReadout",
    "Quad",
    "TEMPLATES",
    "approx_polygon",
    "find_contours",
    "glyph_template",
    "locate_plate",
    "make_ocr",
    "ocr_glyph",
    "perspective_map",
    "plate_background_type",
    "read_plate",
    "rectify",
    "rectify_rgb",
    "register_ocr",
    "segment_chars",
]
