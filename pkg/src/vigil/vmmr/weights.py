"""Weight bundles and their on-disk format.

File layout: magic "VMMR1", a 4-byte little-endian length, a JSON header
{"version", "fingerprint", "shapes": [[...] per array per layer]}, then the
arrays as raw little-endian float32 in layer order. Round trips are
bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arch import (
    DEPTHWISE_CONV,
    FULLY_CONNECTED,
    POINTWISE_CONV,
    STANDARD_CONV,
    ArchitectureSpec,
    LayerSpec,
)

MAGIC = b"VMMR1"
FORMAT_VERSION = 1


class Corrupt(Exception):
    pass


class FingerprintMismatch(Exception):
    pass


class WeightMismatch(Exception):
    pass


@dataclass
class WeightBundle:
    """Per-layer arrays (tuple per layer, empty for weightless layers)."""

    arrays: list[tuple[np.ndarray, ...]]
    fingerprint: str
    version: int = FORMAT_VERSION
    labels: list[str] | None = None  # optional class-index -> name mapping


def _layer_array_shapes(spec: ArchitectureSpec) -> list[list[tuple[int, ...]]]:
    shapes: list[list[tuple[int, ...]]] = []
    for layer in spec.layers:
        kh, kw = layer.kernel
        if layer.kind == STANDARD_CONV:
            shapes.append([(kh, kw, layer.in_channels, layer.out_channels), (layer.out_channels,)])
        elif layer.kind == DEPTHWISE_CONV:
            shapes.append([(kh, kw, layer.in_channels)])
        elif layer.kind == POINTWISE_CONV:
            shapes.append([(layer.in_channels, layer.out_channels)])
        elif layer.kind == FULLY_CONNECTED:
            shapes.append([(layer.in_channels, layer.out_channels), (layer.out_channels,)])
        else:
            shapes.append([])
    return shapes


def zero_weights(spec: ArchitectureSpec) -> WeightBundle:
    arrays = [
        tuple(np.zeros(shape, dtype=np.float32) for shape in layer_shapes)
        for layer_shapes in _layer_array_shapes(spec)
    ]
    return WeightBundle(arrays=arrays, fingerprint=spec.fingerprint())


def random_weights(spec: ArchitectureSpec, seed: int = 0, scale: float = 0.1) -> WeightBundle:
    rng = np.random.default_rng(seed)
    arrays = [
        tuple(
            (rng.standard_normal(shape) * scale).astype(np.float32) for shape in layer_shapes
        )
        for layer_shapes in _layer_array_shapes(spec)
    ]
    return WeightBundle(arrays=arrays, fingerprint=spec.fingerprint())


def validate_weights(spec: ArchitectureSpec, bundle: WeightBundle):
    """Every array must match the spec-derived shape exactly."""
    expected = _layer_array_shapes(spec)
    if len(bundle.arrays) != len(expected):
        raise WeightMismatch(f"{len(bundle.arrays)} layers of arrays, spec has {len(expected)}")
    for i, (got, want) in enumerate(zip(bundle.arrays, expected)):
        if [tuple(a.shape) for a in got] != [tuple(s) for s in want]:
            raise WeightMismatch(f"layer {i}: arrays {[a.shape for a in got]} != {want}")


def describe_arch(spec: ArchitectureSpec) -> dict:
    return {
        "width_multiplier": spec.width_multiplier,
        "input_resolution": spec.input_resolution,
        "num_classes": spec.num_classes,
        "layers": [
            [l.kind, l.stride, list(l.kernel), l.in_channels, l.out_channels]
            for l in spec.layers
        ],
    }


def arch_from_header(d: dict) -> ArchitectureSpec:
    return ArchitectureSpec(
        layers=tuple(
            LayerSpec(kind, stride=stride, kernel=tuple(kernel), in_channels=cin, out_channels=cout)
            for kind, stride, kernel, cin, cout in d["layers"]
        ),
        width_multiplier=d["width_multiplier"],
        input_resolution=d["input_resolution"],
        num_classes=d["num_classes"],
    )


def save_weights(bundle: WeightBundle, path: str | Path, spec: ArchitectureSpec | None = None):
    header = {
        "version": bundle.version,
        "fingerprint": bundle.fingerprint,
        "shapes": [[list(a.shape) for a in layer] for layer in bundle.arrays],
    }
    if spec is not None:
        header["arch"] = describe_arch(spec)
    if bundle.labels is not None:
        header["labels"] = bundle.labels
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for layer in bundle.arrays:
            for arr in layer:
                f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_weights(path: str | Path, expected_spec: ArchitectureSpec | None = None) -> WeightBundle:
    data = Path(path).read_bytes()
    if data[:5] != MAGIC:
        raise Corrupt(f"bad magic {data[:5]!r}")
    if len(data) < 9:
        raise Corrupt("truncated header length")
    (hlen,) = struct.unpack("<I", data[5:9])
    if len(data) < 9 + hlen:
        raise Corrupt("truncated header")
    try:
        header = json.loads(data[9 : 9 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise Corrupt(f"unreadable header: {e}")
    offset = 9 + hlen
    arrays: list[tuple[np.ndarray, ...]] = []
    for layer_shapes in header["shapes"]:
        layer = []
        for shape in layer_shapes:
            n = int(np.prod(shape)) if shape else 1
            need = n * 4
            chunk = data[offset : offset + need]
            if len(chunk) < need:
                raise Corrupt("truncated array payload")
            layer.append(np.frombuffer(chunk, dtype="<f4").reshape(shape).copy())
            offset += need
        arrays.append(tuple(layer))
    bundle = WeightBundle(
        arrays=arrays,
        fingerprint=header["fingerprint"],
        version=header.get("version", FORMAT_VERSION),
        labels=header.get("labels"),
    )
    if expected_spec is not None and bundle.fingerprint != expected_spec.fingerprint():
        raise FingerprintMismatch(
            f"file fingerprint {bundle.fingerprint} != spec {expected_spec.fingerprint()}"
        )
    return bundle


def load_model(path: str | Path) -> tuple[ArchitectureSpec, WeightBundle]:
    """Load a weight file that embeds its architecture description."""
    data = Path(path).read_bytes()
    if data[:5] != MAGIC or len(data) < 9:
        raise Corrupt("bad magic or truncated header")
    (hlen,) = struct.unpack("<I", data[5:9])
    try:
        header = json.loads(data[9 : 9 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise Corrupt(f"unreadable header: {e}")
    if "arch" not in header:
        raise Corrupt("weight file does not embed an architecture description")
    spec = arch_from_header(header["arch"])
    bundle = load_weights(path, expected_spec=spec)
    validate_weights(spec, bundle)
    return spec, bundle
