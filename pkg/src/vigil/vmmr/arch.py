"""Layer-stack construction under width/resolution multipliers, shape
propagation, and parameter / multiply-add accounting.

The canonical stack: one standard 3x3 stride-2 conv, thirteen
depthwise+pointwise pairs walking the channel plan
32-64-128-128-256-256-512-(5x512)-1024-1024 with stride-2 depthwise steps at
each spatial halving, global average pooling, a fully-connected head, and
softmax. Every channel count scales by the width multiplier (rounded to
nearest, minimum 1). 'same' padding throughout, so stride-2 halves spatial
dims with ceiling.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass


class ArchError(Exception):
    pass


class BadAlpha(ArchError):
    pass


class BadResolution(ArchError):
    pass


class ShapeMismatch(ArchError):
    pass


VALID_RESOLUTIONS = (224, 192, 160, 128)

STANDARD_CONV = "standard-conv"
DEPTHWISE_CONV = "depthwise-conv"
POINTWISE_CONV = "pointwise-conv"
GLOBAL_AVG_POOL = "global-avg-pool"
FULLY_CONNECTED = "fully-connected"
SOFTMAX = "softmax"

LAYER_KINDS = (
    STANDARD_CONV,
    DEPTHWISE_CONV,
    POINTWISE_CONV,
    GLOBAL_AVG_POOL,
    FULLY_CONNECTED,
    SOFTMAX,
)

# (pointwise output channels, depthwise stride) per separable pair, pre-scaling
_PAIR_PLAN = [
    (64, 1),
    (128, 2),
    (128, 1),
    (256, 2),
    (256, 1),
    (512, 2),
    (512, 1),
    (512, 1),
    (512, 1),
    (512, 1),
    (512, 1),
    (1024, 2),
    (1024, 1),
]


@dataclass(frozen=True)
class TensorShape:
    height: int
    width: int
    channels: int

    def __post_init__(self):
        if min(self.height, self.width, self.channels) < 1:
            raise ValueError(f"all dims must be >= 1, got {self}")

    def __str__(self) -> str:
        return f"{self.height}x{self.width}x{self.channels}"


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    stride: int = 1
    kernel: tuple[int, int] = (1, 1)
    in_channels: int = 1
    out_channels: int = 1

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {self.stride}")
        if self.kind == DEPTHWISE_CONV and self.in_channels != self.out_channels:
            raise ValueError("depthwise layers preserve channel count")
        if self.kind == POINTWISE_CONV and self.kernel != (1, 1):
            raise ValueError("pointwise kernel must be 1x1")


@dataclass(frozen=True)
class ArchitectureSpec:
    layers: tuple[LayerSpec, ...]
    width_multiplier: float
    input_resolution: int
    num_classes: int

    def __post_init__(self):
        if len(self.layers) < 2:
            raise ValueError("need at least a head and softmax")
        if self.layers[-1].kind != SOFTMAX or self.layers[-2].kind != FULLY_CONNECTED:
            raise ValueError("final two layers must be fully-connected then softmax")
        propagate_shapes(self)  # raises ShapeMismatch on inconsistency

    def fingerprint(self) -> str:
        """Stable digest of everything a weight file must agree on."""
        h = hashlib.sha256()
        h.update(f"a={self.width_multiplier};r={self.input_resolution};c={self.num_classes}".encode())
        for layer in self.layers:
            h.update(
                f"|{layer.kind},{layer.stride},{layer.kernel[0]}x{layer.kernel[1]},"
                f"{layer.in_channels},{layer.out_channels}".encode()
            )
        return h.hexdigest()[:16]


def scaled(channels: int, alpha: float) -> int:
    """Width-multiplied channel count: nearest integer, minimum 1."""
    return max(1, int(round(channels * alpha)))


def build_architecture(alpha: float, resolution: int, num_classes: int) -> ArchitectureSpec:
    if not (0.0 < alpha <= 1.0):
        raise BadAlpha(f"width multiplier must be in (0, 1], got {alpha}")
    if resolution not in VALID_RESOLUTIONS:
        raise BadResolution(f"resolution must be one of {VALID_RESOLUTIONS}, got {resolution}")
    if num_classes < 2:
        raise ValueError(f"need >= 2 classes, got {num_classes}")

    layers = [
        LayerSpec(STANDARD_CONV, stride=2, kernel=(3, 3), in_channels=3, out_channels=scaled(32, alpha))
    ]
    channels = scaled(32, alpha)
    for out, stride in _PAIR_PLAN:
        layers.append(
            LayerSpec(DEPTHWISE_CONV, stride=stride, kernel=(3, 3), in_channels=channels, out_channels=channels)
        )
        out_scaled = scaled(out, alpha)
        layers.append(
            LayerSpec(POINTWISE_CONV, stride=1, kernel=(1, 1), in_channels=channels, out_channels=out_scaled)
        )
        channels = out_scaled
    layers.append(LayerSpec(GLOBAL_AVG_POOL, in_channels=channels, out_channels=channels))
    layers.append(LayerSpec(FULLY_CONNECTED, in_channels=channels, out_channels=num_classes))
    layers.append(LayerSpec(SOFTMAX, in_channels=num_classes, out_channels=num_classes))
    return ArchitectureSpec(
        layers=tuple(layers),
        width_multiplier=alpha,
        input_resolution=resolution,
        num_classes=num_classes,
    )


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def propagate_shapes(spec: ArchitectureSpec) -> list[TensorShape]:
    """Input shape of each layer in order. 'same' padding: stride-2 layers
    halve spatial dims with ceiling; pooling collapses HxWxC to 1x1xC."""
    shapes = []
    cur = TensorShape(spec.input_resolution, spec.input_resolution, 3)
    for layer in spec.layers:
        if layer.kind in (STANDARD_CONV, DEPTHWISE_CONV, POINTWISE_CONV):
            if layer.in_channels != cur.channels:
                raise ShapeMismatch(
                    f"{layer.kind} declares in_channels={layer.in_channels}, propagation gives {cur.channels}"
                )
            shapes.append(cur)
            cur = TensorShape(
                _ceil_div(cur.height, layer.stride),
                _ceil_div(cur.width, layer.stride),
                layer.out_channels,
            )
        elif layer.kind == GLOBAL_AVG_POOL:
            if layer.in_channels != cur.channels:
                raise ShapeMismatch("pool channel mismatch")
            shapes.append(cur)
            cur = TensorShape(1, 1, cur.channels)
        elif layer.kind == FULLY_CONNECTED:
            if cur.height != 1 or cur.width != 1 or layer.in_channels != cur.channels:
                raise ShapeMismatch(
                    f"fully-connected expects 1x1x{layer.in_channels}, propagation gives {cur}"
                )
            shapes.append(cur)
            cur = TensorShape(1, 1, layer.out_channels)
        elif layer.kind == SOFTMAX:
            shapes.append(cur)
    return shapes


def count_params(spec: ArchitectureSpec) -> int:
    """Weight counts: standard conv kh*kw*Cin*Cout + Cout bias; depthwise
    kh*kw*C; pointwise Cin*Cout; fully-connected Cin*Cout + Cout bias."""
    total = 0
    for layer in spec.layers:
        kh, kw = layer.kernel
        if layer.kind == STANDARD_CONV:
            total += kh * kw * layer.in_channels * layer.out_channels + layer.out_channels
        elif layer.kind == DEPTHWISE_CONV:
            total += kh * kw * layer.in_channels
        elif layer.kind == POINTWISE_CONV:
            total += layer.in_channels * layer.out_channels
        elif layer.kind == FULLY_CONNECTED:
            total += layer.in_channels * layer.out_channels + layer.out_channels
    return total


def count_mult_adds(spec: ArchitectureSpec) -> int:
    """Multiply-add counts over the output spatial grid of each layer."""
    shapes = propagate_shapes(spec)
    total = 0
    for layer, in_shape in zip(spec.layers, shapes):
        kh, kw = layer.kernel
        oh = _ceil_div(in_shape.height, layer.stride)
        ow = _ceil_div(in_shape.width, layer.stride)
        if layer.kind == STANDARD_CONV:
            total += kh * kw * layer.in_channels * layer.out_channels * oh * ow
        elif layer.kind == DEPTHWISE_CONV:
            total += kh * kw * layer.in_channels * oh * ow
        elif layer.kind == POINTWISE_CONV:
            total += layer.in_channels * layer.out_channels * in_shape.height * in_shape.width
        elif layer.kind == FULLY_CONNECTED:
            total += layer.in_channels * layer.out_channels
    return total


def render_arch_table(spec: ArchitectureSpec) -> str:
    """Aligned text table: layer kind/stride, filter shape, input size."""
    shapes = propagate_shapes(spec)
    rows = [("Type/Stride", "Filter Shape", "Input Size")]
    for layer, shape in zip(spec.layers, shapes):
        kh, kw = layer.kernel
        if layer.kind == STANDARD_CONV:
            kind = f"conv/s{layer.stride}"
            filt = f"{kh}x{kw}x{layer.in_channels}x{layer.out_channels}"
        elif layer.kind == DEPTHWISE_CONV:
            kind = f"conv dw/s{layer.stride}"
            filt = f"{kh}x{kw}x{layer.in_channels} dw"
        elif layer.kind == POINTWISE_CONV:
            kind = f"conv/s{layer.stride}"
            filt = f"1x1x{layer.in_channels}x{layer.out_channels}"
        elif layer.kind == GLOBAL_AVG_POOL:
            kind = "avg pool"
            filt = f"pool {shape.height}x{shape.width}"
        elif layer.kind == FULLY_CONNECTED:
            kind = "fc/s1"
            filt = f"{layer.in_channels}x{layer.out_channels}"
        else:
            kind = "softmax"
            filt = "classifier"
        rows.append((kind, filt, str(shape)))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
    return "\n".join(lines)
